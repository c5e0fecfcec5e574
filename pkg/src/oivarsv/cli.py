"""Command-line entry points: simulate, estimate, forecast-eval,
demo-ordering, and summarize.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import dgp
from .config import RunConfig
from .data_io import Dataset, load_code_map, load_csv
from .forecast import EstimationSettings, ForecastConfig, ModelRun, recursive_eval
from .model import PermutationMap
from .persist import format_digest, load_draws, save_draws, write_summary
from .priors import build_priors
from .sampler import run_mcmc

logger = logging.getLogger("oivarsv")


def _add_sampler_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", type=Path, help="key = value configuration file")
    sp.add_argument("--seed", type=int, help="base RNG seed")
    sp.add_argument("--model", choices=("oi", "cs"), help="impact-matrix structure")
    sp.add_argument("--ordering", default=None,
                    help="'as-given', 'reversed', or a permutation file "
                         "(one 0-based index per line)")
    sp.add_argument("--lags", type=int, help="VAR lag order")
    sp.add_argument("--burn", type=int, help="burn-in sweeps")
    sp.add_argument("--draws", type=int, help="retained draws")
    sp.add_argument("--thin", type=int, help="thinning interval")
    sp.add_argument("--an-backend", choices=("mh", "approx"),
                    help="absolute-normal sampler backend")
    sp.add_argument("--chains", type=int, help="independent chains")
    sp.add_argument("--out-dir", type=Path, default=Path("oivarsv-out"),
                    help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oivarsv",
        description="Order-invariant Bayesian VARs with stochastic volatility",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="generate a synthetic dataset and its truth")
    sp.add_argument("--design", choices=("section5", "section5-nosv", "section61"),
                    default="section5")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--T", type=int, default=500)
    sp.add_argument("--lags", type=int, default=4)
    sp.add_argument("--out-dir", type=Path, default=Path("oivarsv-out"))

    sp = sub.add_parser("estimate", help="run the Gibbs sampler on a dataset")
    sp.add_argument("--data", type=Path, required=True,
                    help="dataset (.npz from simulate, or a wide CSV)")
    sp.add_argument("--codes", type=Path,
                    help="mnemonic,code CSV (required for CSV input)")
    _add_sampler_flags(sp)

    sp = sub.add_parser("forecast-eval", help="recursive out-of-sample evaluation")
    sp.add_argument("--data", type=Path, required=True)
    sp.add_argument("--codes", type=Path)
    sp.add_argument("--models", default="oi,cs",
                    help="comma list of structure[:ordering] entries, e.g. "
                         "'oi:as-given,oi:reversed,cs:as-given'")
    _add_sampler_flags(sp)

    sp = sub.add_parser("demo-ordering",
                        help="Monte Carlo check that triangular priors inflate "
                             "later variables' error variances")
    sp.add_argument("--n", type=int, default=3)
    sp.add_argument("--reps", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", type=Path, help="optional CSV destination")

    sp = sub.add_parser("summarize", help="digest an existing draws file")
    sp.add_argument("draws_file", type=Path)

    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg.update_from_file(args.config)
    overrides = {
        "seed": "seed", "model": "model", "ordering": "ordering", "lags": "lags",
        "burn": "burn", "draws": "draws", "thin": "thin",
        "an_backend": "an_backend", "chains": "chains",
    }
    for attr, key in overrides.items():
        value = getattr(args, attr, None)
        if value is not None:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg


def _load_dataset(data_path: Path, codes_path: Path | None) -> Dataset:
    if data_path.suffix == ".npz":
        return Dataset.load(data_path)
    if codes_path is None:
        raise ValueError("CSV input requires --codes (mnemonic,code file)")
    return load_csv(data_path, load_code_map(codes_path))


def _resolve_ordering(spec: str, n: int) -> PermutationMap:
    if spec == "as-given":
        return PermutationMap.identity(n)
    if spec == "reversed":
        return PermutationMap.reversal(n)
    path = Path(spec)
    if not path.exists():
        raise ValueError(f"ordering must be 'as-given', 'reversed' or a file: {spec!r}")
    perm = tuple(int(tok) for tok in path.read_text().split())
    return PermutationMap(perm)


def _write_series_csv(path: Path, ds: Dataset) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["date"] + ds.names)
        for t, date in enumerate(ds.dates):
            w.writerow([date] + [f"{v:.10g}" for v in ds.raw[t]])


def cmd_simulate(args: argparse.Namespace) -> int:
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    if args.design == "section61":
        ds, truth, h = dgp.generate_section61(args.seed, T=args.T)
    else:
        ds, truth, h = dgp.generate_section5(
            args.seed, n=args.n, T=args.T, p=args.lags,
            sv_on=(args.design == "section5"),
        )
    ds.save(out / "dataset.npz")
    np.savez(out / "truth.npz", A=truth.A, B0=truth.B0, phi=truth.phi,
             omega2=truth.omega2, h=h, p=truth.p)
    _write_series_csv(out / "series.csv", ds)
    print(f"wrote {out / 'dataset.npz'}, {out / 'truth.npz'}, {out / 'series.csv'}")
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    cfg.write(out / "run_config.ini")
    ds = _load_dataset(args.data, args.codes)
    pmap = _resolve_ordering(cfg.ordering, ds.n)
    ds_run = ds.permuted(pmap.perm)
    Y, X = ds_run.regression_matrices(cfg.lags)
    priors = build_priors(ds_run.transformed, cfg.lags, ds_run.level_flags,
                          structure=cfg.model, **cfg.prior_kwargs())
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.chains)
    samples = []
    for c, ss in enumerate(seeds):
        logger.info("running chain %d/%d", c + 1, cfg.chains)
        sample = run_mcmc(Y, X, priors, cfg.lags, cfg.burn, cfg.draws, cfg.thin,
                          seed=ss if cfg.chains > 1 else cfg.seed,
                          structure=cfg.model, an_backend=cfg.an_backend,
                          log_sq_offset=cfg.log_sq_offset)
        # chains > 1 derive their streams from the base seed; the chain index
        # lives in the file name
        sample.meta.seed = cfg.seed
        save_draws(out / f"draws_chain{c}.bin", sample, ds_run.names)
        samples.append(sample)
    pooled = samples[0] if cfg.chains == 1 else _pool_samples(samples)
    digest = write_summary(out, pooled, ds_run.names)
    print(f"estimate complete: {digest['draws']} draws in "
          f"{digest['total_time_s']:.1f} s; summary in {out}")
    return 0


def _pool_samples(samples):
    first = samples[0]
    pooled = type(first)(
        A=np.concatenate([s.A for s in samples]),
        B0=np.concatenate([s.B0 for s in samples]),
        phi=np.concatenate([s.phi for s in samples]),
        omega2=np.concatenate([s.omega2 for s in samples]),
        h=np.concatenate([s.h for s in samples]),
        kappa1=np.concatenate([s.kappa1 for s in samples]),
        kappa2=np.concatenate([s.kappa2 for s in samples]),
        psi=np.concatenate([s.psi for s in samples]),
        z_psi=np.concatenate([s.z_psi for s in samples]),
        z_k1=np.concatenate([s.z_k1 for s in samples]),
        z_k2=np.concatenate([s.z_k2 for s in samples]),
        meta=first.meta,
    )
    pooled.meta.sweep_times = np.concatenate([s.meta.sweep_times for s in samples])
    return pooled


def cmd_forecast_eval(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    cfg.write(out / "run_config.ini")
    ds = _load_dataset(args.data, args.codes)
    models = []
    for entry in args.models.split(","):
        entry = entry.strip()
        if not entry:
            continue
        structure, _, ordering = entry.partition(":")
        ordering = ordering or "as-given"
        if structure not in ("oi", "cs"):
            raise ValueError(f"unknown structure in --models: {structure!r}")
        pmap = _resolve_ordering(ordering, ds.n)
        models.append(ModelRun(name=f"{structure}:{ordering}", structure=structure,
                               ordering=pmap))
    if not models:
        raise ValueError("--models selected no models")
    T_total = ds.transformed.shape[0]
    origin_start = cfg.origin_start or max(cfg.lags + 30, T_total // 2)
    origin_end = cfg.origin_end or (T_total - max(cfg.horizons))
    fcfg = ForecastConfig(
        horizons=cfg.horizons, origin_start=origin_start, origin_end=origin_end,
        origin_stride=cfg.origin_stride, n_paths=cfg.n_paths,
        refit_every=cfg.refit_every, n_forecast_draws=cfg.n_forecast_draws,
        benchmark=cfg.benchmark or models[0].name,
    )
    est = EstimationSettings(p=cfg.lags, n_burn=cfg.burn, n_draws=cfg.draws,
                             thin=cfg.thin, an_backend=cfg.an_backend,
                             prior_kwargs=cfg.prior_kwargs())
    table = recursive_eval(ds, models, fcfg, est, seed=cfg.seed)
    table.to_csv(out / "forecast_table.csv")
    with open(out / "forecast_summary.txt", "w") as f:
        f.write(f"benchmark: {table.benchmark}\n")
        f.write(f"origins: {len(table.origins)} "
                f"({table.origins[0]} .. {table.origins[-1]})\n")
        for key in sorted(table.rmsfe):
            f.write(f"{key[0]:>16s}  {key[1]:>12s}  h={key[2]:<3d} "
                    f"rmsfe={table.rmsfe[key]:.6g}  alpl={table.alpl[key]:.6g}\n")
    print(f"forecast evaluation written to {out / 'forecast_table.csv'}")
    return 0


def cmd_demo_ordering(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    estimates = dgp.ordering_variance_demo(args.n, args.reps, rng)
    theory = 2.0 ** np.arange(args.n)
    print(f"{'i':>3s} {'estimate':>12s} {'theory':>12s} {'rel_err':>10s}")
    rows = []
    for i in range(args.n):
        rel = estimates[i] / theory[i] - 1.0
        print(f"{i + 1:>3d} {estimates[i]:>12.4f} {theory[i]:>12.1f} {rel:>10.2%}")
        rows.append((i + 1, estimates[i], theory[i], rel))
    if args.out:
        with open(args.out, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["i", "estimate", "theory", "rel_err"])
            w.writerows(rows)
    return 0


def cmd_summarize(args: argparse.Namespace) -> int:
    sample, names = load_draws(args.draws_file)
    dims = sample.meta.dims
    names = names or [f"y{i + 1}" for i in range(dims.n)]
    total_time = float(sample.meta.sweep_times.sum())
    digest = {
        "model": sample.meta.model, "n": dims.n, "p": dims.p, "T": dims.T,
        "draws": len(sample), "burn": sample.meta.n_burn, "thin": sample.meta.thin,
        "seed": sample.meta.seed,
        "kappa1_mean": float(sample.kappa1.mean()) if len(sample) else float("nan"),
        "kappa2_mean": float(sample.kappa2.mean()) if len(sample) else float("nan"),
        "total_time_s": total_time,
        "mean_sweep_ms": 1e3 * total_time / max(sample.meta.sweep_times.size, 1),
        "an_accept_rate": sample.meta.an_accept_rate,
        "phi_accept_rate": sample.meta.phi_accept_rate,
    }
    if len(sample):
        print(format_digest(digest, names, sample.B0.mean(axis=0),
                            sample.phi.mean(axis=0), sample.omega2.mean(axis=0)))
    else:
        print("empty draws file")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "forecast-eval": cmd_forecast_eval,
    "demo-ordering": cmd_demo_ordering,
    "summarize": cmd_summarize,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
