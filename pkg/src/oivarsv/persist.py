"""Binary persistence of posterior draws plus human-readable summaries.

Draws file layout (all little-endian, documented in the README):

  header:
    magic           8 bytes  b"OIVARSV\\0"
    version         u32      currently 1
    model           u8       0 = unrestricted impact matrix, 1 = triangular
    pad             3 bytes
    n, p, T, k      u32 x 4
    n_draws         u32
    n_burn          u32
    thin            u32
    seed            i64
    an_accept_rate  f8
    phi_accept_rate f8
    n_names         u32
    names           n_names x (u32 length + utf-8 bytes)
  sweep times:      (n_burn + n_draws * thin) f8
  draws, row-major f8 blocks per retained draw, in order:
    A (k*n), B0 (n*n), phi (n), omega2 (n), h (T*n),
    kappa1, kappa2, psi (k*n), z_psi (k*n), z_k1, z_k2
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .model import ModelDims, PosteriorSample, SampleMeta, posterior_mean_sigma_path

MAGIC = b"OIVARSV\x00"
VERSION = 1
_MODEL_CODES = {"oi": 0, "cs": 1}
_MODEL_NAMES = {v: k for k, v in _MODEL_CODES.items()}


def save_draws(path: str | Path, sample: PosteriorSample,
               names: list[str] | None = None) -> None:
    meta = sample.meta
    dims = meta.dims
    R = len(sample)
    names = names or []
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IB3x", VERSION, _MODEL_CODES[meta.model]))
        f.write(struct.pack("<5I", dims.n, dims.p, dims.T, dims.k, R))
        f.write(struct.pack("<IIq", meta.n_burn, meta.thin, meta.seed))
        f.write(struct.pack("<dd", meta.an_accept_rate, meta.phi_accept_rate))
        f.write(struct.pack("<I", len(names)))
        for name in names:
            enc = name.encode("utf-8")
            f.write(struct.pack("<I", len(enc)))
            f.write(enc)
        f.write(np.ascontiguousarray(meta.sweep_times, dtype="<f8").tobytes())
        for r in range(R):
            for arr in (sample.A[r], sample.B0[r], sample.phi[r],
                        sample.omega2[r], sample.h[r]):
                f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
            f.write(struct.pack("<dd", sample.kappa1[r], sample.kappa2[r]))
            for arr in (sample.psi[r], sample.z_psi[r]):
                f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
            f.write(struct.pack("<dd", sample.z_k1[r], sample.z_k2[r]))


def load_draws(path: str | Path) -> tuple[PosteriorSample, list[str]]:
    with open(path, "rb") as f:
        if f.read(8) != MAGIC:
            raise ValueError(f"{path}: not a draws file")
        version, model_code = struct.unpack("<IB3x", f.read(8))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        n, p, T, k, R = struct.unpack("<5I", f.read(20))
        n_burn, thin, seed = struct.unpack("<IIq", f.read(16))
        an_rate, phi_rate = struct.unpack("<dd", f.read(16))
        (n_names,) = struct.unpack("<I", f.read(4))
        names = []
        for _ in range(n_names):
            (ln,) = struct.unpack("<I", f.read(4))
            names.append(f.read(ln).decode("utf-8"))
        n_sweeps = n_burn + R * thin
        times = np.frombuffer(f.read(8 * n_sweeps), dtype="<f8").copy()
        sample = PosteriorSample(
            A=np.empty((R, k, n)), B0=np.empty((R, n, n)),
            phi=np.empty((R, n)), omega2=np.empty((R, n)), h=np.empty((R, T, n)),
            kappa1=np.empty(R), kappa2=np.empty(R),
            psi=np.empty((R, k, n)), z_psi=np.empty((R, k, n)),
            z_k1=np.empty(R), z_k2=np.empty(R),
            meta=SampleMeta(
                model=_MODEL_NAMES[model_code], seed=seed, n_burn=n_burn,
                thin=thin, dims=ModelDims(n=n, p=p, T=T), sweep_times=times,
                an_accept_rate=an_rate, phi_accept_rate=phi_rate,
            ),
        )

        def read_block(shape):
            count = int(np.prod(shape))
            return np.frombuffer(f.read(8 * count), dtype="<f8").reshape(shape).copy()

        for r in range(R):
            sample.A[r] = read_block((k, n))
            sample.B0[r] = read_block((n, n))
            sample.phi[r] = read_block((n,))
            sample.omega2[r] = read_block((n,))
            sample.h[r] = read_block((T, n))
            sample.kappa1[r], sample.kappa2[r] = struct.unpack("<dd", f.read(16))
            sample.psi[r] = read_block((k, n))
            sample.z_psi[r] = read_block((k, n))
            sample.z_k1[r], sample.z_k2[r] = struct.unpack("<dd", f.read(16))
        tail = f.read(1)
        if tail:
            raise ValueError(f"{path}: trailing bytes after draws")
    return sample, names


def _sigma_header(names: list[str]) -> list[str]:
    n = len(names)
    cols = []
    for i in range(n):
        for j in range(i, n):
            cols.append(f"sigma[{names[i]},{names[j]}]")
    return cols


def write_summary(out_dir: str | Path, sample: PosteriorSample,
                  names: list[str] | None = None) -> dict:
    """Posterior-mean summary files: text digest, B0/kappa CSVs, covariance path CSV."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dims = sample.meta.dims
    names = names or [f"y{i + 1}" for i in range(dims.n)]
    R = len(sample)
    if R == 0:
        raise ValueError("cannot summarize an empty sample")
    b0_mean = sample.B0.mean(axis=0)
    kappa1_mean = float(sample.kappa1.mean())
    kappa2_mean = float(sample.kappa2.mean())
    phi_mean = sample.phi.mean(axis=0)
    omega2_mean = sample.omega2.mean(axis=0)
    sigma_path = posterior_mean_sigma_path(sample)

    with open(out_dir / "b0_mean.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["row"] + names)
        for i, name in enumerate(names):
            w.writerow([name] + [f"{v:.10g}" for v in b0_mean[i]])

    with open(out_dir / "kappa.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["parameter", "posterior_mean"])
        w.writerow(["kappa1", f"{kappa1_mean:.10g}"])
        w.writerow(["kappa2", f"{kappa2_mean:.10g}"])

    with open(out_dir / "sigma_path_mean.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t"] + _sigma_header(names))
        for t in range(dims.T):
            row = [str(t + 1)]
            for i in range(dims.n):
                for j in range(i, dims.n):
                    row.append(f"{sigma_path[t, i, j]:.10g}")
            w.writerow(row)

    total_time = float(sample.meta.sweep_times.sum())
    digest = {
        "model": sample.meta.model,
        "n": dims.n, "p": dims.p, "T": dims.T,
        "draws": R, "burn": sample.meta.n_burn, "thin": sample.meta.thin,
        "seed": sample.meta.seed,
        "kappa1_mean": kappa1_mean, "kappa2_mean": kappa2_mean,
        "total_time_s": total_time,
        "mean_sweep_ms": 1e3 * total_time / max(sample.meta.sweep_times.size, 1),
        "an_accept_rate": sample.meta.an_accept_rate,
        "phi_accept_rate": sample.meta.phi_accept_rate,
    }
    with open(out_dir / "summary.txt", "w") as f:
        f.write(format_digest(digest, names, b0_mean, phi_mean, omega2_mean))
    return digest


def format_digest(digest: dict, names: list[str], b0_mean: np.ndarray,
                  phi_mean: np.ndarray, omega2_mean: np.ndarray) -> str:
    lines = [
        f"model           : {digest['model']}",
        f"dimensions      : n={digest['n']} p={digest['p']} T={digest['T']}",
        f"retained draws  : {digest['draws']} (burn {digest['burn']}, thin {digest['thin']})",
        f"seed            : {digest['seed']}",
        f"total time      : {digest['total_time_s']:.2f} s "
        f"({digest['mean_sweep_ms']:.3f} ms/sweep)",
        f"AN accept rate  : {digest['an_accept_rate']:.4f}",
        f"phi accept rate : {digest['phi_accept_rate']:.4f}",
        f"kappa1 mean     : {digest['kappa1_mean']:.6g}",
        f"kappa2 mean     : {digest['kappa2_mean']:.6g}",
        "posterior mean of B0:",
    ]
    for i, name in enumerate(names):
        row = "  ".join(f"{v:10.4f}" for v in b0_mean[i])
        lines.append(f"  {name:>12s}  {row}")
    lines.append("phi means       : " + "  ".join(f"{v:.4f}" for v in phi_mean))
    lines.append("omega2 means    : " + "  ".join(f"{v:.5f}" for v in omega2_mean))
    return "\n".join(lines) + "\n"
