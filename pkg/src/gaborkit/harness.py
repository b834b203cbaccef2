"""Experiment driver: seeded batch runs that emit plot-ready CSV.

Every experiment takes an :class:`ExperimentConfig`, returns its rows as a
list of dicts and can write them with :func:`write_csv`.  Randomness comes
from ``numpy.random.default_rng([seed, stream, trial])`` with named streams,
so a single component (channel, noise, symbols, trial parameters) can be
varied while the others stay fixed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import channel as chn
from . import decay_algebra as da
from . import gabor, lattice, transceiver as trx
from .weights import polynomial

STREAMS = {"channel": 1, "noise": 2, "symbols": 3, "params": 4}


def stream(seed: int, name: str, trial: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed), STREAMS[name], int(trial)])


# -- configuration --------------------------------------------------------------

@dataclass
class ExperimentConfig:
    experiment: str
    N: int = 512
    seed: int = 0
    trials: int = 20
    out_dir: str = "."
    params: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls(**json.loads(text))

    @property
    def hash(self) -> str:
        d = asdict(self)
        d.pop("out_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:12]

    def get(self, key, default=None):
        return self.params.get(key, default)


_TOP = {"experiment", "N", "seed", "trials", "out_dir"}


def parse_config_text(text: str) -> dict:
    """JSON object, or ``key = value`` lines with JSON-parsed values."""
    text = text.strip()
    if not text:
        return {}
    if text.startswith("{"):
        return json.loads(text)
    out = {}
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {ln}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = _parse_value(v)
    return out


def _parse_value(v: str):
    try:
        return json.loads(v)
    except json.JSONDecodeError:
        return v.strip("\"'")


def build_config(experiment: str, raw: dict, **overrides) -> ExperimentConfig:
    raw = dict(raw)
    params = dict(raw.pop("params", {}))
    top = {k: raw.pop(k) for k in list(raw) if k in _TOP}
    params.update(raw)
    top.update({k: v for k, v in overrides.items() if v is not None})
    top["experiment"] = experiment
    cfg = ExperimentConfig(params=params, **top)
    if cfg.N < 8 or cfg.trials < 1:
        raise ValueError("N must be >= 8 and trials >= 1")
    return cfg


def write_csv(path, rows: list, cfg: ExperimentConfig) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        fh.write(f"# experiment={cfg.experiment} config_hash={cfg.hash} seed={cfg.seed}\n")
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return path


def read_csv(path) -> list:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# -- condition numbers ----------------------------------------------------------

def cond_sweep_grid(p: int, target: int = 512) -> tuple:
    """``(N, a, k)`` with ``N = p (p+1) k^2`` and ``a = b = (p+1) k``."""
    k = max(1, int(round(np.sqrt(target / (p * (p + 1))))))
    return p * (p + 1) * k * k, (p + 1) * k, k


def cond_rect(p: int, target: int = 512) -> float:
    N, a, _ = cond_sweep_grid(p, target)
    return gabor.GaborSystem(gabor.gaussian(N), lattice.IntegerLattice(N, a, a)).cond


def cond_hex(p: int, target: int = 512) -> float:
    rho = p / (p + 1)
    N, a, k = cond_sweep_grid(p, target)
    if k % 2:
        k += 1
        N, a = p * (p + 1) * k * k, (p + 1) * k
    T = 1 / np.sqrt(rho)
    lat, dt = lattice.realize(lattice.hexagonal(T, T), N)
    return gabor.GaborSystem(gabor.gaussian(N, dt=dt), lat).cond


def run_cond_sweep(cfg: ExperimentConfig) -> list:
    """``cond(R)`` of the Gaussian on rectangular and hexagonal lattices at ``rho = p/(p+1)``."""
    p_max = int(cfg.get("p_max", 25))
    rows = []
    for p in range(1, p_max + 1):
        rows.append({"p": p, "rho": p / (p + 1), "cond_rect": cond_rect(p, cfg.N),
                     "cond_hex": cond_hex(p, cfg.N)})
    return rows


# -- links ----------------------------------------------------------------------

def mean_snir(system: trx.Transceiver, spec_for_trial: Callable, cfg: ExperimentConfig,
              noise: float, trials: int) -> float:
    """Average SNIR with common random numbers: trial ``t`` always draws the same channel, symbols and noise."""
    vals = np.empty(trials)
    for t in range(trials):
        spec = spec_for_trial(t)
        ch = chn.realize(spec, system.N, stream(cfg.seed, "channel", t))
        c = trx.qpsk(system.n_symbols, stream(cfg.seed, "symbols", t))
        res = trx.run_link(system, c, ch, noise, stream(cfg.seed, "noise", t))
        vals[t] = res.snir
    return float(vals.mean())


def standard_ofdm(N: int, a: int = 32, b: int = 32) -> trx.PSOFDM:
    lat = lattice.IntegerLattice(N, a, b)
    return trx.PSOFDM(gabor.lowdin(gabor.gaussian(N, b / a), lat), lat)


def run_snir_vs_cp(cfg: ExperimentConfig) -> list:
    """CP-OFDM SNIR against prefix length next to the PS-OFDM value."""
    N = cfg.N
    a = b = int(cfg.get("a", 32))
    noise = float(cfg.get("noise", 1e-3))
    beta = float(cfg.get("beta", 0.5))
    cps = cfg.get("cp_lens", list(range(0, N // b + 1, 2)))
    scen = cfg.get("scenarios", [[8, 0], [8, 8]])
    fadings = cfg.get("fadings", ["ricean", "rayleigh"])
    alphas = cfg.get("alphas", [0.05, 0.5])
    ps = standard_ofdm(N, a, b)
    cp_sys = {cp: trx.CPOFDM(N, a, b, cp) for cp in cps}
    rows = []
    for tau0, nu0 in scen:
        for fading in fadings:
            for alpha in alphas:
                spec = chn.ScatteringSpec(int(tau0), int(nu0), float(alpha), beta, fading)
                f = lambda t, spec=spec: spec
                ps_val = mean_snir(ps, f, cfg, noise, cfg.trials)
                for cp in cps:
                    rows.append({"tau0": tau0, "nu0": nu0, "fading": fading, "alpha": alpha, "cp_len": cp,
                                 "snir_cp": mean_snir(cp_sys[cp], f, cfg, noise, cfg.trials),
                                 "snir_ps": ps_val})
    return rows


def run_ebfdm_sweep(cfg: ExperimentConfig) -> list:
    """SNIR of the biorthogonal system against the exponent ``p``."""
    N = cfg.N
    a = b = int(cfg.get("a", 32))
    tau0, nu0 = cfg.get("dispersion", [0, 0])
    noises = cfg.get("noises", [1e-6, 1e-1])
    step = float(cfg.get("p_step", 0.05))
    ps = np.round(np.arange(0, 1 + step / 2, step), 10)
    lat = lattice.IntegerLattice(N, a, b)
    g = gabor.gaussian(N, b / a)
    spec = chn.ScatteringSpec(int(tau0), int(nu0), float(cfg.get("alpha", 0.5)),
                              float(cfg.get("beta", 0.5)), cfg.get("fading", "ricean"))
    systems = {p: trx.EBFDM(g, lat, float(p)) for p in ps}
    rows = []
    for noise in noises:
        for p in ps:
            rows.append({"noise": noise, "p": float(p),
                         "snir": mean_snir(systems[p], lambda t: spec, cfg, float(noise), cfg.trials)})
    return rows


LOFDM_POINTS = [[1, 1], [2, 1], [1, 2], [2, 2], [4, 1], [1, 4]]
LOFDM_SHAPES = [(32, 32), (64, 16), (16, 64)]


def lofdm_shape(tau0: int, nu0: int) -> tuple:
    """Lattice ``(a, b)`` whose aspect ratio is closest to ``tau0 / nu0``, square on ties."""
    if tau0 == 0 or nu0 == 0:
        return 32, 32
    r = np.log(tau0 / nu0)
    return min(LOFDM_SHAPES, key=lambda ab: (round(abs(np.log(ab[0] / ab[1]) - r), 12), ab[0] != ab[1]))


def lofdm_systems(N: int, a: int, b: int) -> tuple:
    """Rectangular PS-OFDM and hexagonal LOFDM systems adapted to the lattice shape ``(a, b)``.

    The hexagonal pulse is the Löwdin pulse of the Gaussian stretched by
    ``2/sqrt(3)``, which is the exact hexagonal pulse carried to the integer
    grid ``(a, a/2, b)`` by a pure dilation.
    """
    rect = lattice.IntegerLattice(N, a, b)
    hexl = lattice.IntegerLattice(N, a, b, a // 2)
    s = b / a
    ph_r = gabor.lowdin(gabor.gaussian(N, s), rect)
    ph_h = gabor.lowdin(gabor.gaussian(N, s * 2 / np.sqrt(3)), hexl)
    return trx.PSOFDM(ph_r, rect), trx.LOFDM(ph_h, hexl)


def run_lofdm_vs_ofdm(cfg: ExperimentConfig) -> list:
    """Mean SNIR of rectangular OFDM and hexagonal LOFDM over random WSSUS channels."""
    N = cfg.N
    noise = float(cfg.get("noise", 1e-9))
    pts = cfg.get("points", LOFDM_POINTS)
    a_rng = cfg.get("alpha_range", [0.05, 0.5])
    b_rng = cfg.get("beta_range", [0.0, 1.0])
    fading = cfg.get("fading", "ricean")
    cache = {}
    rows = []
    for tau0, nu0 in pts:
        a, b = lofdm_shape(tau0, nu0)
        if (a, b) not in cache:
            cache[(a, b)] = lofdm_systems(N, a, b)
        r_sys, h_sys = cache[(a, b)]

        def spec(t, tau0=tau0, nu0=nu0):
            u = stream(cfg.seed, "params", t)
            return chn.ScatteringSpec(int(tau0), int(nu0), float(u.uniform(*a_rng)), float(u.uniform(*b_rng)), fading)

        so = mean_snir(r_sys, spec, cfg, noise, cfg.trials)
        sl = mean_snir(h_sys, spec, cfg, noise, cfg.trials)
        rows.append({"tau0": tau0, "nu0": nu0, "spread": tau0 * nu0 / N, "a": a, "b": b,
                     "snir_ofdm": so, "snir_lofdm": sl, "gain_db": sl - so})
    return rows


# -- decay ----------------------------------------------------------------------

def run_decay_probe(cfg: ExperimentConfig) -> list:
    """Forward and inverse decay exponents of ``delta + eps G``."""
    n = int(cfg.get("n", 256))
    h = float(cfg.get("h", 1 / 32))
    eps_list = cfg.get("eps", [0.1, 0.5])
    kinds = cfg.get("kinds", ["gaussian", "polynomial"])
    s = float(cfg.get("s", 3.0))
    rows = []
    for kind in kinds:
        if kind == "gaussian":
            gen = da.gaussian_generator()
            w = None
        else:
            gen = lambda t: (1 + np.abs(t)) ** -s
            w = polynomial(s)
        for eps in eps_list:
            K = da.perturbed_identity(float(eps), n, h, gen)
            Ki = da.invert(K)
            fwd = da.decay_profile(K, w)
            inv = da.decay_profile(Ki, w)
            rows.append({"kind": kind, "eps": eps, "n": n, "h": h,
                         "exponent_fwd": fwd.exponent, "exponent_inv": inv.exponent,
                         "ratio": inv.exponent / fwd.exponent if fwd.exponent else float("nan"),
                         "weighted_sup_fwd": float(fwd.weighted.max()),
                         "weighted_sup_inv": float(inv.weighted.max())})
    return rows


# -- pulses ---------------------------------------------------------------------

def pulse_lattice(cfg: ExperimentConfig) -> lattice.LatticeGenerator:
    spec = cfg.get("lattice", {"name": "rect", "T": np.sqrt(2), "F": np.sqrt(2)})
    return lattice.from_config(spec)


def run_pulse(cfg: ExperimentConfig) -> list:
    """Löwdin pulse for the configured lattice as ``index, re, im`` rows."""
    L = pulse_lattice(cfg)
    phi = gabor.pulse_for_lattice(L, cfg.N, float(cfg.get("sigma", 1.0)))
    return [{"index": j, "re": float(v.real), "im": float(v.imag)} for j, v in enumerate(phi)]


EXPERIMENTS = {
    "cond-sweep": run_cond_sweep,
    "snir-cp": run_snir_vs_cp,
    "ebfdm-sweep": run_ebfdm_sweep,
    "lofdm-compare": run_lofdm_vs_ofdm,
    "decay-probe": run_decay_probe,
    "pulse": run_pulse,
}


def run(cfg: ExperimentConfig, write: bool = True):
    rows = EXPERIMENTS[cfg.experiment](cfg)
    path = None
    if write:
        path = write_csv(Path(cfg.out_dir) / f"{cfg.experiment}.csv", rows, cfg)
    return rows, path


# -- CLI ------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gaborkit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="experiment", required=True)
    for name, fn in EXPERIMENTS.items():
        sp = sub.add_parser(name, help=(fn.__doc__ or "").strip().splitlines()[0])
        sp.add_argument("--config", help="JSON file or key = value lines")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir")
        sp.add_argument("--trials", type=int)
        sp.add_argument("--N", type=int)
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a parameter (value parsed as JSON)")
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    try:
        raw = {}
        if args.config:
            raw = parse_config_text(Path(args.config).read_text())
        for item in args.set:
            if "=" not in item:
                raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            raw[k.strip()] = _parse_value(v.strip())
        cfg = build_config(args.experiment, raw, seed=args.seed, out_dir=args.out_dir,
                           trials=args.trials, N=args.N)
        _, path = run(cfg)
    except Exception as exc:  # report any validation failure as one JSON line
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
