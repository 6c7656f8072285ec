"""Declarative experiment runner: ``sim run <config.toml|preset>`` and ``sim presets list``.

A config is a TOML file with top-level ``experiment``, ``shots`` and ``seed`` and
one table per parameter block: ``[qubit]`` (QubitParams), ``[bath]``
(BathModel), ``[sequence]`` (sweep grids and pulse settings), ``[cooling]``
(protocol settings) and ``[fit]``. Grids are either explicit lists or tables
``{start, stop, num}``.

Exit codes: 0 success, 2 config error, 3 fit non-convergence.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import tomli

from . import constants as C
from . import io
from .analysis import (DECAY_MODELS, FitError, FitResult, fft_sigma, fit_chevron, fit_decay, fit_powerlaw,
                       metrics)
from .bath import BathModel, sigma_from_t2star, t2star_from_sigma
from .bloch import averaged_chevron
from .centralspin import CentralSpinSystem, hh_scan
from .cooling import QscConfig, RabiCoolingConfig, run_protocol
from .model import QubitParams
from .sequences import (Envelope, run_chevron, run_cpmg, run_detuned_ramsey, run_phase_sweep,
                        run_rabi, run_ramsey, run_t1_pumpprobe)

EXPERIMENTS = ("rabi", "ramsey", "detuned_ramsey", "cpmg", "t1", "phase_sweep", "rabi_cooling", "qsc",
               "hh_scan", "chevron")
TABLES = ("qubit", "bath", "sequence", "cooling", "fit")
TOP_LEVEL = ("experiment", "shots", "seed", "threads", "name", "description") + TABLES


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    qubit: QubitParams = field(default_factory=QubitParams)
    bath: BathModel = field(default_factory=BathModel)
    sequence: dict = field(default_factory=dict)
    cooling: dict = field(default_factory=dict)
    fit: dict = field(default_factory=dict)
    shots: int = 1000
    seed: int = 0
    threads: int = 1
    name: str = "run"
    bath_keys: frozenset = frozenset()

    def cooling_bath(self, scheme: str) -> BathModel:
        """Bath for a cooling run; Rabi cooling re-warms on its own measured time scale."""
        if scheme == "rabi" and "relax_time" not in self.bath_keys:
            return self.bath.with_(relax_time=C.RELAX_TIME_RABI_US)
        return self.bath


def _build(cls, table: dict, prefix: str):
    names = {f.name for f in dataclasses.fields(cls)}
    for key in table:
        if key not in names:
            raise ConfigError(f"{prefix}.{key}: unknown field (valid: {', '.join(sorted(names))})")
    try:
        return cls(**table)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{prefix}: {exc}") from exc


def parse_config(data: dict, name: str = "run") -> ExperimentConfig:
    for key in data:
        if key not in TOP_LEVEL:
            raise ConfigError(f"{key}: unknown top-level key (valid: {', '.join(TOP_LEVEL)})")
    exp = data.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown experiment {exp!r}; valid experiments are "
                          + ", ".join(EXPERIMENTS))
    shots = data.get("shots", 1000)
    if not isinstance(shots, int) or shots < 1:
        raise ConfigError(f"shots: must be an integer >= 1, got {shots!r}")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed: must be a non-negative integer, got {seed!r}")
    threads = data.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        raise ConfigError(f"threads: must be an integer >= 1, got {threads!r}")
    for t in TABLES:
        if t in data and not isinstance(data[t], dict):
            raise ConfigError(f"{t}: must be a table")
    return ExperimentConfig(
        experiment=exp,
        qubit=_build(QubitParams, data.get("qubit", {}), "qubit"),
        bath=_build(BathModel, data.get("bath", {}), "bath"),
        sequence=dict(data.get("sequence", {})),
        cooling=dict(data.get("cooling", {})),
        fit=dict(data.get("fit", {})),
        shots=shots, seed=seed, threads=threads, name=data.get("name", name),
        bath_keys=frozenset(data.get("bath", {})),
    )


# --- presets -------------------------------------------------------------------------

def preset_names():
    root = resources.files("spincool") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def _preset_path(name):
    names = preset_names()
    if name in names:
        match = name
    else:
        # allow descriptive suffixes such as "fig3b_qsc"
        cands = [p for p in names if name.startswith(p + "_")]
        if len(cands) != 1:
            return None
        match = cands[0]
    return resources.files("spincool") / "presets" / f"{match}.toml"


def load_config(source: str) -> ExperimentConfig:
    path = Path(source)
    if path.is_file():
        text, name = path.read_text(), path.stem
    else:
        pp = _preset_path(source)
        if pp is None:
            raise ConfigError(f"config: no file or preset named {source!r} "
                              f"(presets: {', '.join(preset_names())})")
        text, name = pp.read_text(), pp.name[:-5]
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config: invalid TOML ({exc})") from exc
    return parse_config(data, name)


# --- parameter helpers -----------------------------------------------------------------

def _grid(table, key, prefix="sequence", required=True, default=None):
    if key not in table:
        if required:
            raise ConfigError(f"{prefix}.{key}: missing grid")
        return default
    spec = table[key]
    if isinstance(spec, dict):
        try:
            g = np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"{prefix}.{key}: grid table needs numeric start, stop, num") from exc
    elif isinstance(spec, list):
        g = np.asarray(spec, float)
    else:
        raise ConfigError(f"{prefix}.{key}: must be a list or a {{start, stop, num}} table")
    if g.size == 0:
        raise ConfigError(f"{prefix}.{key}: grid is empty")
    return g


def _num(table, key, default, prefix="sequence", minimum=None):
    v = table.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{prefix}.{key}: must be a number, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{prefix}.{key}: must be >= {minimum}, got {v}")
    return float(v)


def _check_keys(table, allowed, prefix):
    for k in table:
        if k not in allowed:
            raise ConfigError(f"{prefix}.{k}: unknown field (valid: {', '.join(sorted(allowed))})")


FIT_KEYS = {"model", "offset", "oscillation", "fft", "at_offset", "p0"}


def _fit_envelope(env, fit: dict) -> FitResult | None:
    if not fit or "model" not in fit:
        return None
    if fit["model"] not in DECAY_MODELS:
        raise ConfigError(f"fit.model: must be one of {', '.join(DECAY_MODELS)}, got {fit['model']!r}")
    kw = {"offset": bool(fit.get("offset", False))}
    if "oscillation" in fit:
        kw["oscillation"] = float(fit["oscillation"])
    res = fit_decay(env, fit["model"], **kw)
    if fit.get("fft"):
        sigma = fft_sigma(env)
        res.params["fft_sigma"] = sigma
        res.errors["fft_sigma"] = float("nan")
    return res


class Outputs:
    """Collects files to write and a short text summary."""

    def __init__(self):
        self.files = []  # (filename, writer, args)
        self.fits = []
        self.summary = []

    def envelope(self, name, env):
        self.files.append((name, io.write_envelope, (env,)))

    def add(self, name, writer, *args):
        self.files.append((name, writer, args))

    def fit(self, res):
        if res is not None:
            self.fits.append(res)

    def say(self, line):
        self.summary.append(line)


# --- experiments ---------------------------------------------------------------------

COOL_KEYS = {"scheme", "reps", "n_traj", "sweep", "schemes", "lock_offsets"}


def _cooling_cfg(cool: dict, scheme: str):
    base = {k: v for k, v in cool.items() if k not in COOL_KEYS}
    cls = QscConfig if scheme == "qsc" else RabiCoolingConfig
    return _build(cls, base, "cooling")


def _cool(cfg: ExperimentConfig, scheme: str, out: Outputs, tag=""):
    cool = cfg.cooling
    reps = cool.get("reps", 60)
    if not isinstance(reps, int) or reps < 1:
        raise ConfigError(f"cooling.reps: must be an integer >= 1, got {reps!r}")
    n_traj = cool.get("n_traj", 20000)
    if not isinstance(n_traj, int) or n_traj < 2:
        raise ConfigError(f"cooling.n_traj: must be an integer >= 2, got {n_traj!r}")
    ccfg = _cooling_cfg(cool, scheme)
    trace = run_protocol(ccfg, reps, cfg.cooling_bath(scheme), np.random.SeedSequence([cfg.seed, 1]),
                         n_traj=n_traj)
    out.add(f"trace{tag}.csv", io.write_trace, trace)
    out.say(f"{scheme}{tag}: final sigma {trace.final_sigma:.4g} MHz, T2* {trace.final_t2star:.4g} ns, "
            f"experiment time {trace.experiment_time:.4g} us")
    return trace


def _ramsey_from_sequence(cfg, out, delta_pool=None, bath=None):
    seq = cfg.sequence
    _check_keys(seq, {"tau", "serrodyne", "rabi", "probe_offset", "ideal_pulses"}, "sequence")
    env = run_ramsey(cfg.qubit, bath or cfg.bath, _grid(seq, "tau"), _num(seq, "serrodyne", 0.0),
                     cfg.shots, cfg.seed, rabi=_num(seq, "rabi", 100.0, minimum=0),
                     probe_offset=_num(seq, "probe_offset", 0.0),
                     ideal_pulses=bool(seq.get("ideal_pulses", True)), delta_pool=delta_pool,
                     threads=cfg.threads)
    out.envelope("envelope.csv", env)
    res = _fit_envelope(env, cfg.fit)
    if res is not None:
        out.fit(res)
        out.say(f"ramsey: T = {res['T']:.4g} ns" + (f", FFT sigma {res['fft_sigma']:.4g} MHz"
                                                     if "fft_sigma" in res.params else ""))
    return env


def exp_rabi(cfg, out):
    seq = cfg.sequence
    _check_keys(seq, {"t", "omega", "delta", "delta_ac"}, "sequence")
    omega = _num(seq, "omega", 130.0, minimum=0)
    env = run_rabi(cfg.qubit, cfg.bath, omega, _num(seq, "delta", 0.0), _grid(seq, "t"), cfg.shots,
                   cfg.seed, delta_ac=_num(seq, "delta_ac", 0.0), threads=cfg.threads)
    out.envelope("envelope.csv", env)
    fit = dict(cfg.fit)
    if fit and "oscillation" not in fit:
        fit["oscillation"] = omega
    res = _fit_envelope(env, fit)
    if res is not None:
        q, fpi = metrics(res["T"], res["frequency"])
        res.params.update(Q=q, f_pi=fpi)
        res.errors.update(Q=float("nan"), f_pi=float("nan"))
        out.fit(res)
        out.say(f"rabi: T2_Rabi {res['T']:.4g} ns, f {res['frequency']:.4g} MHz, Q {q:.4g}")


def exp_ramsey(cfg, out):
    pool = None
    if cfg.cooling:
        scheme = cfg.cooling.get("scheme", "qsc")
        pool = _cool(cfg, scheme, out).ensemble
    _ramsey_from_sequence(cfg, out, pool)


def exp_detuned_ramsey(cfg, out):
    seq = cfg.sequence
    _check_keys(seq, {"tau", "offsets", "rabi", "t2star"}, "sequence")
    bath = cfg.bath
    if "t2star" in seq:
        bath = bath.with_(sigma_static=float(sigma_from_t2star(_num(seq, "t2star", 87.0, minimum=1e-9))))
    offsets = _grid(seq, "offsets")
    tau = _grid(seq, "tau")
    rmap = run_detuned_ramsey(cfg.qubit, bath, offsets, tau, cfg.shots, cfg.seed,
                              rabi=_num(seq, "rabi", 100.0, minimum=0), threads=cfg.threads)
    out.add("map.csv", io.write_map, rmap.offsets, rmap.sweep, rmap.visibility)
    fit = dict(cfg.fit)
    if fit.get("model"):
        target = float(fit.pop("at_offset", 50.0))
        i = int(np.argmin(np.abs(offsets - target)))
        fit.setdefault("oscillation", abs(offsets[i]))
        out.envelope("envelope.csv", rmap.envelopes[i])
        res = _fit_envelope(rmap.envelopes[i], fit)
        out.fit(res)
        out.say(f"detuned ramsey at {offsets[i]:g} MHz: T2* {res['T']:.4g} ns")


def exp_cpmg(cfg, out):
    seq = cfg.sequence
    _check_keys(seq, {"n_pi", "t", "grid_exponent", "convention"}, "sequence")
    n_list = [int(n) for n in np.atleast_1d(seq.get("n_pi", [1]))]
    if any(n < 1 for n in n_list):
        raise ConfigError("sequence.n_pi: every entry must be >= 1")
    base = _grid(seq, "t")
    expo = _num(seq, "grid_exponent", 0.0)
    points = []
    for n in n_list:
        env = run_cpmg(cfg.qubit, cfg.bath, n, base * n ** expo, cfg.shots, cfg.seed,
                       convention=seq.get("convention", "n_tau"), threads=cfg.threads)
        out.envelope(f"cpmg_n{n:02d}.csv", env)
        res = _fit_envelope(env, cfg.fit)
        if res is not None:
            res.model = f"{res.model}_n{n}"
            out.fit(res)
            points.append((n, res["T"]))
            out.say(f"cpmg N={n}: T2 {res['T']:.4g} us")
    if len(points) >= 3:
        pl = fit_powerlaw(points)
        out.fit(FitResult("powerlaw", {"gamma": pl.gamma, "prefactor": pl.prefactor},
                          {"gamma": pl.gamma_err, "prefactor": float("nan")}, 0.0, len(points)))
        out.say(f"cpmg: gamma {pl.gamma:.3f} +- {pl.gamma_err:.3f}")


def exp_t1(cfg, out):
    seq = cfg.sequence
    _check_keys(seq, {"tau"}, "sequence")
    env = run_t1_pumpprobe(cfg.qubit, _grid(seq, "tau"), cfg.shots, cfg.seed, threads=cfg.threads)
    out.envelope("envelope.csv", env)
    res = _fit_envelope(env, cfg.fit)
    if res is not None:
        out.fit(res)
        out.say(f"t1: T1 {res['T']:.4g} us")


def exp_phase_sweep(cfg, out):
    seq = cfg.sequence
    _check_keys(seq, {"phi", "rabi"}, "sequence")
    env = run_phase_sweep(cfg.qubit, _grid(seq, "phi"), cfg.shots, cfg.seed,
                          rabi=_num(seq, "rabi", 100.0, minimum=0), threads=cfg.threads)
    out.envelope("envelope.csv", env)


def _cooling_experiment(cfg, out, scheme):
    cool = cfg.cooling
    if "sweep" in cool:
        sw = cool["sweep"]
        if not isinstance(sw, dict) or "name" not in sw or "values" not in sw:
            raise ConfigError("cooling.sweep: needs name and values")
        rows = []
        for sch in cool.get("schemes", [scheme]):
            if sch not in ("qsc", "rabi"):
                raise ConfigError(f"cooling.schemes: unknown scheme {sch!r} (valid: qsc, rabi)")
            ccfg = _cooling_cfg(cool, sch)
            for v in sw["values"]:
                try:
                    c2 = ccfg.with_(**{sw["name"]: v})
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"cooling.sweep: {exc}") from exc
                tr = run_protocol(c2, int(cool.get("reps", 60)), cfg.cooling_bath(sch),
                                  np.random.SeedSequence([cfg.seed, 2]), n_traj=int(cool.get("n_traj", 20000)))
                s = tr.steady_sigma(10)
                rows.append((sch, v, s, float(t2star_from_sigma(s))))
        out.add("sweep.csv", io.write_table, ("scheme", sw["name"], "sigma", "t2star"), rows)
        return
    if "lock_offsets" in cool:
        rows = []
        ccfg = _cooling_cfg(cool, scheme)
        for off in _grid(cool, "lock_offsets", "cooling"):
            tr = run_protocol(ccfg.with_(f_c_offset=float(off)), int(cool.get("reps", 60)),
                              cfg.cooling_bath(scheme), np.random.SeedSequence([cfg.seed, 3]),
                              n_traj=int(cool.get("n_traj", 20000)))
            rows.append((off, float(np.mean(tr.ensemble)), tr.final_sigma))
        out.add("locking.csv", io.write_table, ("offset", "mean_delta", "sigma"), rows)
        return
    trace = _cool(cfg, scheme, out)
    if "tau" in cfg.sequence:
        _ramsey_from_sequence(cfg, out, trace.ensemble)


def exp_rabi_cooling(cfg, out):
    _cooling_experiment(cfg, out, "rabi")


def exp_qsc(cfg, out):
    _cooling_experiment(cfg, out, "qsc")


def exp_hh_scan(cfg, out):
    seq = cfg.sequence
    _check_keys(seq, {"omega_n", "a_col", "a_nc", "detuning", "omega", "t_drive"}, "sequence")
    omega_n = list(np.atleast_1d(seq.get("omega_n", [21.9])))
    n = len(omega_n)
    try:
        sys_ = CentralSpinSystem(omega_n=omega_n, a_col=seq.get("a_col", [0.0] * n),
                                 a_nc=seq.get("a_nc", [0.5] * n), detuning=_num(seq, "detuning", 2.0))
        curve = hh_scan(sys_, _grid(seq, "omega"), _num(seq, "t_drive", 1000.0, minimum=0))
    except ValueError as exc:
        raise ConfigError(f"sequence: {exc}") from exc
    out.add("transfer.csv", io.write_transfer, curve.omega, curve.delta_iz)
    out.say(f"hh_scan: peak at {curve.peak():.4g} MHz")


def exp_chevron(cfg, out):
    seq = cfg.sequence
    _check_keys(seq, {"t", "delta", "omega", "delta_ac", "method"}, "sequence")
    t, deltas = _grid(seq, "t"), _grid(seq, "delta")
    omega = _num(seq, "omega", 8.9, minimum=0)
    dac = _num(seq, "delta_ac", 0.0)
    method = seq.get("method", "mc")
    if method == "mc":
        data = run_chevron(cfg.qubit, cfg.bath, omega, deltas, t, cfg.shots, cfg.seed, delta_ac=dac,
                           threads=cfg.threads)
    elif method == "quadrature":
        tt, dd = np.meshgrid(t, deltas)
        data = averaged_chevron(tt, dd, omega, cfg.bath.sigma_static, dac)
    else:
        raise ConfigError(f"sequence.method: must be 'mc' or 'quadrature', got {method!r}")
    out.add("map.csv", io.write_map, deltas, t, data)
    if cfg.fit.get("model") == "chevron":
        p0 = cfg.fit.get("p0", [5.0, 0.0, 10.0])
        res = fit_chevron(t, deltas, data, p0=p0, amplitude=method == "mc")
        out.fit(res)
        out.say(f"chevron: sigma {res['sigma_oh']:.4g} MHz, delta_ac {res['delta_ac']:.4g} MHz, "
                f"omega {res['omega']:.4g} MHz")


RUNNERS = {
    "rabi": exp_rabi, "ramsey": exp_ramsey, "detuned_ramsey": exp_detuned_ramsey, "cpmg": exp_cpmg,
    "t1": exp_t1, "phase_sweep": exp_phase_sweep, "rabi_cooling": exp_rabi_cooling, "qsc": exp_qsc,
    "hh_scan": exp_hh_scan, "chevron": exp_chevron,
}


def emit_results(obj, path):
    """Write an Envelope, cooling trace, FitResult (or list of them) as CSV."""
    if isinstance(obj, Envelope):
        return io.write_envelope(obj, path)
    if isinstance(obj, FitResult):
        return io.write_fit(obj, path)
    if isinstance(obj, (list, tuple)) and all(isinstance(o, FitResult) for o in obj):
        return io.write_rows(path, io.FIT_COLUMNS, [r for o in obj for r in o.rows()])
    if hasattr(obj, "sigma_now"):
        return io.write_trace(obj, path)
    if hasattr(obj, "delta_iz"):
        return io.write_transfer(obj.omega, obj.delta_iz, path)
    raise TypeError(f"cannot emit {type(obj).__name__}")


def run_config(cfg: ExperimentConfig, out_dir) -> Outputs:
    if cfg.fit:
        _check_keys(cfg.fit, FIT_KEYS, "fit")
    out = Outputs()
    RUNNERS[cfg.experiment](cfg, out)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, writer, args in out.files:
        writer(*args, out_dir / name)
    if out.fits:
        emit_results(out.fits, out_dir / "fit.csv")
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a config file or named preset")
    run.add_argument("config")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", default=None)
    run.add_argument("--threads", type=int)
    run.add_argument("--shots", type=int, help="override the shot count (quick runs)")
    pre = sub.add_parser("presets", help="preset configs")
    pre.add_argument("action", choices=["list"])
    args = parser.parse_args(argv)

    if args.command == "presets":
        for name in preset_names():
            print(name)
        return 0
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed: must be >= 0")
            cfg.seed = args.seed
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads: must be >= 1")
            cfg.threads = args.threads
        if args.shots is not None:
            if args.shots < 1:
                raise ConfigError("--shots: must be >= 1")
            cfg.shots = args.shots
        out_dir = args.out or str(Path("out") / cfg.name)
        out = run_config(cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return 3
    for line in out.summary:
        print(line)
    print(f"wrote {len(out.files) + bool(out.fits)} file(s) to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
