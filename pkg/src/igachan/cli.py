"""Command-line surface: generate / estimate / benchmark / validate.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import harness, ic, iga, scenario
from .bscm import (
    BscmScenario,
    ScenarioConfig,
    assemble_dense_A,
    geometry_from_config,
    load_scenario_config,
)
from .errors import ConfigError, DivergenceError, DomainError
from .estimators import MeasurementModel, mmse_estimate, modified_mmse_estimate

EXIT_OK = 0
EXIT_VALIDATION_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def _parse_seed(text: str) -> int:
    try:
        seed = int(text)
    except ValueError:
        raise ConfigError(f"seed must be an integer, got {text!r}") from None
    if not (0 <= seed < 2**64):
        raise ConfigError("seed must fit in an unsigned 64-bit integer")
    return seed


def _parse_snr_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ConfigError(f"cannot parse SNR list {text!r}") from None


def _parse_alg_list(text: str) -> list[str]:
    algs = [tok.strip() for tok in text.split(",") if tok.strip() != ""]
    for a in algs:
        if a not in harness.ALGORITHMS:
            raise ConfigError(
                f"unknown algorithm {a!r}; choose from {', '.join(harness.ALGORITHMS)}"
            )
    return algs


def _load_config(args) -> ScenarioConfig:
    if getattr(args, "config", None):
        cfg = load_scenario_config(args.config)
    else:
        cfg = ScenarioConfig()
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=_parse_seed(args.seed))
    return cfg


def _build_trial(cfg: ScenarioConfig, snr_db: float, trial: int = 0):
    """One reproducible scenario draw: (scn, d, y, channels, sigma2)."""
    array, ofdm, plan = geometry_from_config(cfg)
    sigma2 = 10.0 ** (-snr_db / 10.0)
    stream = (0, trial)
    powers = scenario.gen_power_matrices(cfg, cfg.seed, stream=stream)
    extraction = scenario.extraction_from_powers(powers, array, ofdm, plan)
    d = scenario.build_prior(powers, extraction, array, ofdm, plan)
    scn = BscmScenario(array, ofdm, plan, extraction)
    channels = scenario.sample_channels(powers, cfg.seed, stream=stream)
    y = scenario.synthesize_rx(scn, channels, sigma2, cfg.seed, stream=stream)
    return scn, d, y, channels, sigma2


def _cmd_generate(args) -> int:
    cfg = _load_config(args)
    array, ofdm, plan = geometry_from_config(cfg)
    powers = scenario.gen_power_matrices(cfg, cfg.seed)
    channels = scenario.sample_channels(powers, cfg.seed)
    os.makedirs(args.out, exist_ok=True)
    p_path = os.path.join(args.out, "powers.bin")
    c_path = os.path.join(args.out, "channels.bin")
    scenario.save_power_matrices(p_path, powers)
    scenario.save_channels(c_path, channels)
    extraction = scenario.extraction_from_powers(powers, array, ofdm, plan)
    print(f"wrote {p_path} and {c_path}")
    print(
        f"users={plan.K} roots={plan.Q} grid={array.N_r}x{ofdm.N_f} "
        f"extracted={extraction.n}/{plan.Q * ofdm.N_p * array.N_r} "
        f"rng={scenario.RNG_FAMILY} seed={cfg.seed}"
    )
    return EXIT_OK


def _cmd_estimate(args) -> int:
    cfg = _load_config(args)
    snr_list = _parse_snr_list(args.snr)
    if len(snr_list) != 1:
        raise ConfigError("estimate takes exactly one --snr value")
    algs = _parse_alg_list(args.alg)
    if len(algs) != 1:
        raise ConfigError("estimate takes exactly one --alg value")
    alg = algs[0]
    scn, d, y, channels, sigma2 = _build_trial(cfg, snr_list[0])
    alpha = args.alpha if args.alpha is not None else harness.DEFAULT_ALPHAS.get(alg, 1.0)

    if alg == "ic_siga":
        model = MeasurementModel(scn, d, sigma2)
        pre = ic.precompute_ic(model, y, mode="operator")
        rep = ic.run_estimator("ic_siga", pre, alpha=alpha, t_max=args.max_iter,
                               tol=args.tol)
    else:
        A = assemble_dense_A(scn.array, scn.ofdm, scn.plan, scn.extraction)
        model = MeasurementModel(A, d, sigma2)
        if alg == "mmse":
            mu, _ = mmse_estimate(model, y)
            rep = None
        elif alg == "modified_mmse":
            mu = modified_mmse_estimate(model, y)
            rep = None
        elif alg == "iga":
            scheme = iga.build_rank1_split(model, y)
            rep = iga.run_iga(scheme, alpha=alpha, t_max=args.max_iter, tol=args.tol)
        else:  # ic_iga
            pre = ic.precompute_ic(model, y, mode="dense")
            rep = ic.run_estimator("ic_iga", pre, alpha=alpha, t_max=args.max_iter,
                                   tol=args.tol)
    mu = rep.mu if rep is not None else mu
    est = harness.reconstruct_G(mu, scn.extraction, scn)
    truth = [scn.beam_to_space_freq(ch.H) for ch in channels]
    trial_nmse = harness.nmse(est, truth)

    summary = {
        "algorithm": alg,
        "snr_db": snr_list[0],
        "nmse": trial_nmse,
        "nmse_db": 10.0 * np.log10(trial_nmse) if trial_nmse > 0 else None,
        "iterations": rep.iterations if rep is not None else 0,
        "converged": rep.converged if rep is not None else True,
        "n": int(scn.extraction.n),
        "m": int(scn.shape[0]),
        "seed": cfg.seed,
        "rng": scenario.RNG_FAMILY,
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    if args.out:
        if rep is not None:
            rep.nmse = trial_nmse
            rep.seed = cfg.seed
            payload = rep.to_dict()
        else:
            payload = dict(summary)
            payload["mu_re"] = np.real(mu).tolist()
            payload["mu_im"] = np.imag(mu).tolist()
        payload["rng"] = scenario.RNG_FAMILY
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
        print(f"wrote {args.out}", file=sys.stderr)
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    cfg = _load_config(args)
    alphas = {}
    if args.alpha is not None:
        alphas = {alg: args.alpha for alg in ("iga", "ic_iga", "ic_siga")}
    spec = harness.BenchmarkSpec(
        snr_list_db=tuple(_parse_snr_list(args.snr)),
        algorithms=tuple(_parse_alg_list(args.alg)),
        n_sam=args.trials,
        scenario=cfg,
        seed=cfg.seed,
        alphas=alphas,
        t_max=args.max_iter,
        tol=args.tol,
        measure_time=args.timing,
    )
    rows = harness.run_benchmark(spec)
    harness.write_benchmark_csv(rows, args.out)
    print(f"wrote {args.out} ({len(rows)} rows, rng={scenario.RNG_FAMILY}, "
          f"seed={cfg.seed})")
    return EXIT_OK


def _cmd_validate(args) -> int:
    results = harness.validate_suite(level=args.level)
    return EXIT_OK if all(ok for ok, _ in results.values()) else EXIT_VALIDATION_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="igachan",
        description="Channel-estimation toolkit: exact MMSE oracles, "
                    "information-geometry estimators, and an NMSE benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_scenario=True):
        if with_scenario:
            p.add_argument("--config", metavar="PATH",
                           help="scenario description file (key = value lines)")
            p.add_argument("--seed", metavar="U64", help="override the scenario seed")

    g = sub.add_parser("generate", help="write power maps and channel draws to files")
    add_common(g)
    g.add_argument("--out", metavar="PATH", default="generated",
                   help="output directory (default: generated)")

    e = sub.add_parser("estimate", help="run one estimation trial and report it")
    add_common(e)
    e.add_argument("--snr", metavar="DB", default="10", help="SNR in dB (one value)")
    e.add_argument("--alg", metavar="NAME", default="ic_iga",
                   help=f"one of {', '.join(harness.ALGORITHMS)}")
    e.add_argument("--alpha", type=float, default=None, help="damping coefficient")
    e.add_argument("--max-iter", type=int, default=100, help="iteration cap")
    e.add_argument("--tol", type=float, default=1e-8, help="relative-change stop")
    e.add_argument("--out", metavar="PATH", help="write the full JSON report here")

    b = sub.add_parser("benchmark", help="NMSE sweep over SNR points and algorithms")
    add_common(b)
    b.add_argument("--snr", metavar="DB[,DB...]", default="-10,0,10,20,30")
    b.add_argument("--alg", metavar="NAME[,NAME...]", default="mmse,ic_iga,ic_siga")
    b.add_argument("--trials", type=int, default=20, help="trials per cell (default 20)")
    b.add_argument("--alpha", type=float, default=None,
                   help="override damping for all iterative algorithms")
    b.add_argument("--max-iter", type=int, default=100)
    b.add_argument("--tol", type=float, default=1e-8)
    b.add_argument("--timing", action="store_true",
                   help="record measured wall times (breaks byte-identical output)")
    b.add_argument("--out", metavar="PATH", default="benchmark.csv")

    v = sub.add_parser("validate", help="run the oracle cross-check suites")
    v.add_argument("--level", choices=("quick", "full"), default="quick")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "generate": _cmd_generate,
        "estimate": _cmd_estimate,
        "benchmark": _cmd_benchmark,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (DomainError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION_FAILURE


if __name__ == "__main__":
    sys.exit(main())
