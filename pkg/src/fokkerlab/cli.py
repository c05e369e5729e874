"""Command-line scenario runner.

Scenarios are INI files with a ``[scenario]`` section and one section per
particle (``[particle1]``, ``[particle2]``).  Every experiment writes CSV
tables into ``<out>/<scenario name>/`` and appends one summary line to
``<out>/manifest.csv``.  Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""
import argparse
import configparser
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .action import fokker_action, modified_action, shifted_action
from .errors import FokkerError, ScenarioError
from .propagator import (
    damped_gaussian_quadrature, first_order_propagator, free_propagator_lattice,
    gaussian_matrix_integral, proper_time_fixing, zeroth_order_propagator,
)
from .solver import SolverOptions, find_stationary, gauge_fixed
from .spinor import evolution_operator
from .worldline import (
    ShiftField, SwitchingProfile, Worldline, load_worldline, reparametrize,
    save_worldline, total_proper_time,
)

log = logging.getLogger("fokkerlab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

EXPERIMENTS = {
    "action-eval": "Fokker action breakdown for the scenario worldlines",
    "invariance-sweep": "action change under proper-time shifts, amplitude halving",
    "classical-orbit": "stationary worldlines from the scenario initial guess",
    "free-propagator": "lattice product versus closed-form evolution operator",
    "gaussian-check": "matrix Gaussian identity versus damped quadrature",
    "perturbation-order": "first-order propagator under charge halving",
    "proper-time-fix": "P_eps trajectory and the proper-time interval",
}


# -- scenario parsing -----------------------------------------------------------

def _vector(text, n=None, name="vector"):
    try:
        vals = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise ScenarioError("cannot parse %s %r" % (name, text)) from None
    if n is not None and len(vals) != n:
        raise ScenarioError("%s needs %d components, got %d" % (name, n, len(vals)))
    return np.array(vals)


def _matrix(text):
    rows = [r for r in text.split(";") if r.strip()]
    M = np.array([_vector(r, name="matrix row") for r in rows])
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ScenarioError("matrix must be square, rows separated by ';'")
    return M


@dataclass
class ParticleSpec:
    mass: float
    profile: SwitchingProfile
    worldline: Worldline
    momentum: np.ndarray
    eps: ShiftField


@dataclass
class Scenario:
    name: str
    experiment: str
    K: int
    steps: int
    hbar: float
    seed: int
    delta_cut: float
    levels: int
    amplitude: float
    tol_grad: float
    max_iter: int
    lambda3: float
    lambda4: float
    tol_shell: float
    A: np.ndarray
    c: np.ndarray
    particles: tuple


def _particle(sec, K, base_dir, label):
    get = sec.get
    try:
        mass = sec.getfloat("mass", 1.0)
        e_max = sec.getfloat("charge", 0.0)
        s_on = sec.getfloat("s_on", -np.inf)
        s_off = sec.getfloat("s_off", np.inf)
        ramp = sec.getfloat("ramp", 1.0)
        profile = SwitchingProfile(e_max, s_on, s_off, ramp)
    except ValueError as exc:
        raise ScenarioError("[%s] %s" % (label, exc)) from None
    kind = get("worldline", "straight")
    if kind == "straight":
        start = _vector(get("start", "0,0,0,0"), 4, "start")
        end = _vector(get("end", "10,0,0,0"), 4, "end")
        w = Worldline.straight(start, end, K, mass, profile)
    elif kind == "circular":
        radius = sec.getfloat("radius", 1.0)
        omega = sec.getfloat("omega", 0.1)
        T = sec.getfloat("duration", 10.0)
        t0 = sec.getfloat("t0", 0.0)
        phase = sec.getfloat("phase", 0.0)
        center = _vector(get("center", "0,0"), 2, "center")
        t = t0 + T * np.linspace(0.0, 1.0, K)
        ang = omega * t + phase
        pts = np.column_stack([t, center[0] + radius * np.cos(ang),
                               center[1] + radius * np.sin(ang), np.zeros(K)])
        w = gauge_fixed(Worldline(pts, np.ones(K), mass, profile))
    elif kind == "file":
        path = get("file")
        if path is None:
            raise ScenarioError("[%s] worldline = file needs a 'file' key" % label)
        path = os.path.join(base_dir, path)
        if not os.path.exists(path):
            raise ScenarioError("[%s] worldline file %s not found" % (label, path))
        w = load_worldline(path, mass, profile)
    else:
        raise ScenarioError("[%s] unknown worldline kind %r" % (label, kind))
    mod = sec.getfloat("lapse_modulation", 0.0)
    if mod:
        # off-shell lapse, N (1 + a sin(pi tau))
        w = w.replace(lapse=w.lapse * (1.0 + mod * np.sin(np.pi * w.tau)))
    momentum = _vector(get("momentum", "%r,0,0,0" % mass), 4, "momentum")
    amp = sec.getfloat("eps_amplitude", 0.0)
    mode = sec.getint("eps_mode", 2)
    eps = ShiftField.from_function(lambda tau: amp * np.sin(np.pi * tau) ** 2
                                   * np.sin(mode * np.pi * tau), w.K)
    return ParticleSpec(mass, profile, w, momentum, eps)


def load_scenario(path, seed=None):
    """Parse and validate a scenario file; raises ScenarioError."""
    if not os.path.exists(path):
        raise ScenarioError("scenario file %s not found" % path)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ScenarioError(str(exc)) from None
    if "scenario" not in cp:
        raise ScenarioError("missing [scenario] section")
    sc = cp["scenario"]
    try:
        experiment = sc.get("experiment")
        if experiment not in EXPERIMENTS:
            raise ScenarioError("unknown experiment %r" % experiment)
        K = sc.getint("K", 65)
        if K < 3:
            raise ScenarioError("K must be >= 3")
        steps = sc.getint("steps", 64)
        vals = dict(
            hbar=sc.getfloat("hbar", 1.0),
            delta_cut=sc.getfloat("delta_cut", 2.0),
            amplitude=sc.getfloat("amplitude", 0.1),
            tol_grad=sc.getfloat("tol_grad", 1e-8),
            tol_shell=sc.getfloat("tol_shell", 1e-8),
        )
        for key, v in vals.items():
            if not v > 0:
                raise ScenarioError("%s must be positive" % key)
        levels = sc.getint("levels", 4)
        max_iter = sc.getint("max_iter", 500)
        if steps < 1 or levels < 2 or max_iter < 1:
            raise ScenarioError("steps >= 1, levels >= 2 and max_iter >= 1 required")
        scenario_seed = sc.getint("seed", 0)
        lam3 = sc.getfloat("lambda3", 0.0)
        lam4 = sc.getfloat("lambda4", 0.0)
        A = _matrix(sc.get("A", "1.0"))
        c = _vector(sc.get("c", ",".join(["0.5"] * A.shape[0])), A.shape[0], "c")
        base = os.path.dirname(os.path.abspath(path))
        parts = []
        for label in ("particle1", "particle2"):
            if label not in cp:
                raise ScenarioError("missing [%s] section" % label)
            parts.append(_particle(cp[label], K, base, label))
    except ScenarioError:
        raise
    except (ValueError, configparser.Error) as exc:
        raise ScenarioError(str(exc)) from None
    name = os.path.splitext(os.path.basename(path))[0]
    return Scenario(name, experiment, K, steps, seed=scenario_seed if seed is None else seed,
                    levels=levels, max_iter=max_iter, lambda3=lam3, lambda4=lam4,
                    A=A, c=c, particles=tuple(parts), **vals)


# -- output helpers -------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([_fmt(v) for v in row])


def _order(values):
    """Observed order log2(v_j / v_{j+1}) of the last halving (nan when undefined)."""
    a, b = values[-2], values[-1]
    if a > 0 and b > 0:
        return float(np.log2(a / b))
    return float("nan")


def _map(fn, tasks, jobs):
    if jobs <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks))


# -- experiments ----------------------------------------------------------------
# each returns (status, metric name, metric value)

def _worldlines(sc):
    return sc.particles[0].worldline, sc.particles[1].worldline


def _action_eval(sc, out, jobs):
    w1, w2 = _worldlines(sc)
    br = fokker_action(w1, w2, sc.delta_cut)
    with open(os.path.join(out, "action.csv"), "w") as fh:
        fh.write(br.csv_header() + "\n" + br.csv_row() + "\n")
    save_worldline(os.path.join(out, "worldline_1.dat"), w1)
    save_worldline(os.path.join(out, "worldline_2.dat"), w2)
    return "ok", "total", br.total


def _random_shape(rng, modes=4):
    c = rng.normal(size=modes)

    def f(tau):
        return sum(ck * np.sin((k + 1) * np.pi * tau) for k, ck in enumerate(c))
    return f


def _invariance_task(task):
    w1, w2, shape_vals, amp, delta_cut = task
    e1 = ShiftField(amp * shape_vals)
    e2 = ShiftField(-0.7 * amp * shape_vals)
    base = fokker_action(w1, w2, delta_cut).total
    change = fokker_action(reparametrize(w1, e1), reparametrize(w2, e2), delta_cut).total - base
    mod = modified_action(w1, w2, e1, e2, delta_cut).total - base
    finite = shifted_action(w1, w2, e1, e2, delta_cut).total - base
    return change, mod - finite


def _invariance_sweep(sc, out, jobs):
    w1, w2 = _worldlines(sc)
    rng = np.random.default_rng(sc.seed)
    amps = sc.amplitude * 0.5 ** np.arange(sc.levels)
    tasks, keys = [], []
    for shape in range(3):
        vals = _random_shape(rng)(w1.tau)
        vals[0] = vals[-1] = 0.0
        for a in amps:
            tasks.append((w1, w2, vals, a, sc.delta_cut))
            keys.append((shape, a))
    results = _map(_invariance_task, tasks, jobs)
    rows = [(s, a, ch, res) for (s, a), (ch, res) in zip(keys, results)]
    _write_csv(os.path.join(out, "invariance.csv"),
               ["shape", "amplitude", "reparam_change", "gateaux_residual"], rows)
    orders = []
    for shape in range(3):
        sel = [r for r in rows if r[0] == shape]
        ch = np.abs([r[2] for r in sel])
        gr = np.abs([r[3] for r in sel])
        orders.append((shape, _order(ch), _order(gr)))
    _write_csv(os.path.join(out, "orders.csv"), ["shape", "reparam_order", "gateaux_order"], orders)
    worst = min(min(o[1], o[2]) for o in orders)
    return "ok", "min_order", worst


def _classical_orbit(sc, out, jobs):
    w1, w2 = _worldlines(sc)
    opts = SolverOptions(tol_grad=sc.tol_grad, max_iter=sc.max_iter, delta_cut=sc.delta_cut)
    rep = find_stationary(w1, w2, opts)
    with open(os.path.join(out, "report.csv"), "w") as fh:
        fh.write(rep.csv_header() + "\n" + rep.csv_row() + "\n")
    save_worldline(os.path.join(out, "worldline_1.dat"), rep.worldlines[0])
    save_worldline(os.path.join(out, "worldline_2.dat"), rep.worldlines[1])
    return ("ok" if rep.converged else "not-converged"), "gradient_norm", rep.gradient_norm


def _free_propagator(sc, out, jobs):
    rows = []
    for which, p in enumerate(sc.particles, start=1):
        S = total_proper_time(p.worldline)
        ref = evolution_operator(p.momentum, p.mass, S, sc.hbar)
        for steps in sorted({1, 4, 16, sc.steps}):
            T = free_propagator_lattice(p.mass, p.momentum, S, steps, sc.hbar)
            rows.append((which, steps, S, float(np.max(np.abs(T - ref)))))
    _write_csv(os.path.join(out, "free_propagator.csv"),
               ["particle", "steps", "S", "error_norm"], rows)
    return "ok", "max_error", max(r[3] for r in rows)


def _gaussian_check(sc, out, jobs):
    n = sc.A.shape[0]
    exact = gaussian_matrix_integral(sc.A, [np.array([[ci]]) for ci in sc.c], sc.hbar)[0, 0]
    value, table = damped_gaussian_quadrature(sc.A, sc.c, sc.hbar)
    rel = abs(value - exact) / abs(exact)
    _write_csv(os.path.join(out, "gaussian.csv"),
               ["n", "exact_re", "exact_im", "quadrature_re", "quadrature_im", "rel_error"],
               [(n, exact.real, exact.imag, value.real, value.imag, rel)])
    _write_csv(os.path.join(out, "damping.csv"), ["eta", "value_re", "value_im"],
               [(eta, v.real, v.imag) for eta, v in table])
    return "ok", "rel_error", rel


def _perturbation_task(task):
    sc_parts, scale, hbar, delta_cut = task
    (m1, p1, w1, e1), (m2, p2, w2, e2) = sc_parts
    S1, S2 = total_proper_time(w1), total_proper_time(w2)
    prof = (e1.scaled(scale), e2.scaled(scale))
    res, full = first_order_propagator(m1, m2, p1, p2, S1, S2, prof, w1, w2, hbar,
                                       delta_cut=delta_cut, full=True)
    res2 = first_order_propagator(m1, m2, p1, p2, S1, S2, (prof[0].scaled(2.0), prof[1]),
                                  w1, w2, hbar, delta_cut=delta_cut)
    T0 = zeroth_order_propagator(m1, m2, p1, p2, S1, S2, hbar).value
    norm1 = float(np.max(np.abs(res.value)))
    lin = float(np.max(np.abs(res2.value - 2.0 * res.value))) / norm1 if norm1 > 0 else 0.0
    return norm1, float(np.max(np.abs(full - T0 - res.value))), lin


def _perturbation_order(sc, out, jobs):
    parts = tuple((p.mass, p.momentum, p.worldline, p.profile) for p in sc.particles)
    scales = 0.5 ** np.arange(sc.levels)
    results = _map(_perturbation_task,
                   [(parts, s, sc.hbar, sc.delta_cut) for s in scales], jobs)
    e = abs(sc.particles[0].profile.e_max)
    rows = [(sc.K - 1, e * s, rem, n1, lin) for s, (n1, rem, lin) in zip(scales, results)]
    _write_csv(os.path.join(out, "perturbation.csv"),
               ["steps", "e", "error_norm", "order1_norm", "linearity"], rows)
    return "ok", "observed_order", _order([r[2] for r in rows])


def _proper_time_fix(sc, out, jobs):
    (a, b) = sc.particles
    fix = proper_time_fixing(a.profile, b.profile, a.worldline, b.worldline, a.eps, b.eps,
                             sc.lambda3, sc.lambda4, tol_shell=sc.tol_shell,
                             delta_cut=sc.delta_cut)
    rows = [(1, s, P) for s, P in zip(fix.s1, fix.P1)] + \
           [(2, s, P) for s, P in zip(fix.s2, fix.P2)]
    _write_csv(os.path.join(out, "p_eps.csv"), ["particle", "s", "P_eps"], rows)
    _write_csv(os.path.join(out, "proper_time.csv"), ["S1", "S2", "residual1", "residual2"],
               [(fix.S1, fix.S2, fix.residual1, fix.residual2)])
    return "ok", "residual", max(fix.residual1, fix.residual2)


_RUNNERS = {
    "action-eval": _action_eval,
    "invariance-sweep": _invariance_sweep,
    "classical-orbit": _classical_orbit,
    "free-propagator": _free_propagator,
    "gaussian-check": _gaussian_check,
    "perturbation-order": _perturbation_order,
    "proper-time-fix": _proper_time_fix,
}


def _append_manifest(out_root, sc, status, metric, value):
    path = os.path.join(out_root, "manifest.csv")
    new = not os.path.exists(path)
    with open(path, "a", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        if new:
            wr.writerow(["scenario", "experiment", "status", "metric", "value"])
        wr.writerow([sc.name, sc.experiment, status, metric, _fmt(value)])


def run_scenario(path, out_root, seed=None, jobs=1):
    """Run one scenario file; returns an exit code."""
    try:
        sc = load_scenario(path, seed)
    except (ScenarioError, FokkerError, ValueError) as exc:
        print("config error in %s: %s" % (path, exc), file=sys.stderr)
        return EXIT_CONFIG
    out = os.path.join(out_root, sc.name)
    os.makedirs(out, exist_ok=True)
    try:
        status, metric, value = _RUNNERS[sc.experiment](sc, out, jobs)
    except (FokkerError, ArithmeticError) as exc:
        print("numerical failure in %s: %s: %s" % (sc.name, type(exc).__name__, exc),
              file=sys.stderr)
        _append_manifest(out_root, sc, "failed:" + type(exc).__name__, "none", float("nan"))
        return EXIT_NUMERIC
    _append_manifest(out_root, sc, status, metric, value)
    log.info("%s: %s %s = %r", sc.name, status, metric, value)
    return EXIT_OK if status == "ok" else EXIT_NUMERIC


def main(argv=None):
    parser = argparse.ArgumentParser(prog="fokkerlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one or more scenario files")
    p_run.add_argument("scenario", nargs="+")
    p_run.add_argument("--out", default="results")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--jobs", type=int, default=1)
    sub.add_parser("list-experiments", help="print the experiment names")
    p_val = sub.add_parser("validate", help="parse a scenario file without running it")
    p_val.add_argument("scenario", nargs="+")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")

    if args.command == "list-experiments":
        for name, desc in EXPERIMENTS.items():
            print("%-20s %s" % (name, desc))
        return EXIT_OK
    if args.command == "validate":
        code = EXIT_OK
        for path in args.scenario:
            try:
                sc = load_scenario(path)
                print("%s: ok (%s, K=%d)" % (path, sc.experiment, sc.K))
            except (ScenarioError, FokkerError, ValueError) as exc:
                print("%s: %s" % (path, exc), file=sys.stderr)
                code = EXIT_CONFIG
        return code
    os.makedirs(args.out, exist_ok=True)
    code = EXIT_OK
    for path in args.scenario:
        code = max(code, run_scenario(path, args.out, args.seed, max(1, args.jobs)))
    return code


if __name__ == "__main__":
    sys.exit(main())
