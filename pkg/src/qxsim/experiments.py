"""Registered experiments producing rectangular result tables.

Every trial draws from ``trial_rng(seed, index)``, so results depend only on
the configuration and never on thread count or output format.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import born, channels, fsp, genpost, nonlinear, qcore
from .errors import BadParam, UnknownExperiment
from .search import SearchInstance

VERSION = "0.1.0"


# -- parameters --------------------------------------------------------------

def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in str(text).split(",") if x.strip())


PARSERS: dict[str, Callable[[str], Any]] = {
    "int": int,
    "float": float,
    "str": str,
    "floats": _floats,
    "ints": _ints,
}


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str
    default: str
    help: str
    choices: tuple[str, ...] = ()

    def parse(self, raw: str) -> Any:
        try:
            value = PARSERS[self.kind](raw)
        except (TypeError, ValueError) as exc:
            raise BadParam(self.name, f"cannot parse {raw!r} as {self.kind}: {exc}") from None
        if self.choices and value not in self.choices:
            raise BadParam(self.name, f"{raw!r} is not one of {', '.join(self.choices)}")
        if self.kind in ("floats", "ints") and not value:
            raise BadParam(self.name, "list must not be empty")
        return value


@dataclass(frozen=True)
class Experiment:
    name: str
    anchor: str
    description: str
    params: tuple[ParamSpec, ...]
    columns: tuple[str, ...]
    run: Callable[["Context"], list[tuple]]

    def resolve(self, given: dict[str, str]) -> dict[str, Any]:
        known = {p.name: p for p in self.params}
        for key in given:
            if key not in known:
                raise BadParam(key, f"unknown parameter for {self.name}")
        return {p.name: p.parse(given.get(p.name, p.default)) for p in self.params}


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict[str, str] = field(default_factory=dict)
    seed: int = 0
    out: str | None = None
    fmt: str = "csv"


@dataclass
class ResultTable:
    columns: tuple[str, ...]
    rows: list[tuple]
    meta: dict[str, Any]

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row of length {len(row)} for {len(self.columns)} columns")

    def records(self) -> list[dict[str, Any]]:
        return [dict(zip(self.columns, row)) for row in self.rows]


def worker_count() -> int:
    raw = os.environ.get("QXSIM_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass
class Context:
    params: dict[str, Any]
    seed: int
    workers: int

    def rng(self, index: int) -> np.random.Generator:
        return qcore.trial_rng(self.seed, index)

    def map_trials(self, fn: Callable[[int], Any], count: int, offset: int = 0) -> list[Any]:
        """Run ``fn(index)`` for ``count`` trial indices, results in index order."""
        indices = range(offset, offset + count)
        if self.workers <= 1 or count <= 1:
            return [fn(i) for i in indices]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, indices))


def _ok(flag) -> int:
    return int(bool(flag))


# -- experiments ---------------------------------------------------------------

def _fsp_capacity(ctx: Context) -> list[tuple]:
    rows = []
    for kappa in ctx.params["kappas"]:
        M = fsp.NonUnitaryMap.diag(1.0, kappa)
        ch = fsp.signal_channel(M, ctx.params["direction"])
        cap = channels.capacity_closed_form(ch)
        bound = fsp.fsp_capacity_bound(M.delta)
        rows.append((kappa, M.delta, ch.eps0, ch.eps1, cap, channels.capacity_optimized(ch),
                     bound, cap / bound if bound else math.nan, _ok(bound <= cap)))
    return rows


def _fsp_search(ctx: Context) -> list[tuple]:
    p = ctx.params
    M = fsp.NonUnitaryMap.diag(1.0, p["kappa"])

    def trial(i: int) -> tuple:
        rng = ctx.rng(i)
        s = int(rng.integers(2))
        inst = SearchInstance.random(p["n"], s, rng)
        out = fsp.fsp_search(inst, M, rng, samples=p["samples"], target=p["target"])
        return (i, s, out.solutions, _ok(out.solutions == s), out.map_applications, out.queries)

    return ctx.map_trials(trial, p["trials"])


def _bbbv(ctx: Context) -> list[tuple]:
    N, q = ctx.params["N"], ctx.params["q"]
    psi0, program = fsp.grover_program(N, q)
    rep = fsp.hybrid_quantities(fsp.run_program(psi0, program))
    rows = []
    for k in range(q + 1):
        c = rep.C[k - 1] if k else 0.0
        r = rep.R[k - 1] if k else 0.0
        c_ok = rep.c_bound_ok[k - 1] if k else True
        d_ok = rep.d_bound_ok[k - 1] if k else rep.d0_zero
        rows.append((k, float(c), float(rep.D[k]), float(r), (4 + rep.B) * k * k,
                     _ok(c_ok), _ok(d_ok), rep.success_probability, fsp.ETA * N))
    return rows


def _born_gadget(ctx: Context) -> list[tuple]:
    p = ctx.params
    model = born.BornModel(p["delta"])
    threshold = 1.0 - 2.0 ** -p["n"]

    def trial(i: int) -> tuple:
        res = born.teleport_signal(model, p["n"], rng=ctx.rng(i))
        return (i, res.fidelity, res.k, res.leakage, threshold, _ok(res.fidelity >= threshold))

    return ctx.map_trials(trial, p["trials"])


def _born_bounds(ctx: Context) -> list[tuple]:
    p = ctx.params
    rows = []
    k_first = None
    offset = 0
    for delta in p["deltas"]:
        model = born.BornModel(delta)

        def trial(i: int, model=model) -> tuple[int, int, int]:
            rng = ctx.rng(i)
            s = int(rng.integers(2))
            out = born.born_search(SearchInstance.random(p["n"], s, rng), model, rng)
            return out.k, int(out.solutions != s), out.queries

        results = ctx.map_trials(trial, p["trials"], offset)
        offset += p["trials"]
        k = results[0][0]
        k_first = k_first or k
        tvd = born.max_signaling_tvd(model, p["signal_qubits"], p["signal_qubits"] // 2,
                                     p["signal_trials"], ctx.rng(offset))
        offset += 1
        bound = born.delta_bound_from_signaling(tvd, p["signal_qubits"]) if tvd > 0 else 0.0
        rows.append((delta, k, k / k_first, sum(r[1] for r in results), p["trials"],
                     max(r[2] for r in results), tvd, bound, _ok(abs(delta) >= bound)))
    return rows


def _clone_search(ctx: Context) -> list[tuple]:
    p = ctx.params
    rows = []
    offset = 0
    for n in p["ns"]:
        def trial(i: int, n=n) -> tuple[int, int, int]:
            rng = ctx.rng(i)
            s = int(rng.integers(2))
            out = nonlinear.clone_search(SearchInstance.random(n, s, rng), rng)
            return int(out.solutions != s), out.iterations, out.queries

        results = ctx.map_trials(trial, p["trials"], offset)
        offset += p["trials"]
        errors = sum(r[0] for r in results)
        rows.append((n, p["trials"], errors, 1.0 - errors / p["trials"],
                     max(r[1] for r in results), max(r[2] for r in results)))
    return rows


def _clone_signal(ctx: Context) -> list[tuple]:
    p = ctx.params
    rows = []
    for j, k in enumerate(p["ks"]):
        ch = nonlinear.clone_signal(k)
        idle, used = nonlinear.clone_signal_frequencies(k, p["trials"], ctx.rng(j))
        sigma = math.sqrt(ch.eps0 * (1 - ch.eps0) / p["trials"])
        z = (idle - ch.eps0) / sigma if sigma > 0 else 0.0
        rows.append((k, ch.eps0, ch.eps1, idle, sigma, z, used))
    return rows


def _haar_overlap(ctx: Context) -> list[tuple]:
    p = ctx.params
    est = genpost.haar_rms_overlap(p["n"], p["samples"], ctx.rng(0), p["op"])
    return [(p["n"], 2 ** p["n"], p["samples"], est.mc, est.exact, est.stderr, est.z)]


def _nlamp(ctx: Context) -> list[tuple]:
    p = ctx.params
    theta = 2.0 ** p["log2_initial"]
    a = qcore.PureState([1.0, 0.0])
    b = qcore.PureState([math.cos(theta), math.sin(theta)])

    def trial(i: int) -> tuple:
        kappa = p["kappas"][i]
        S = nonlinear.NonlinearMap.from_matrix(np.diag([1.0, kappa]))
        mag = nonlinear.estimate_magnification(S, p["samples"], ctx.rng(i))
        res = nonlinear.nonlinear_amplify(S, a, b, p["target"], mag)
        start = qcore.trace_distance(a, b)
        cap = math.ceil(math.log(p["target"] / start) / math.log(mag.r)) + 10
        return (kappa, mag.r, abs(mag.r - kappa) / kappa, res.iterations, cap, res.distances[-1])

    return ctx.map_trials(trial, len(p["kappas"]))


def _channel_grid(ctx: Context) -> list[tuple]:
    g = ctx.params["grid"]
    pts = [(i + 1) / (g + 1) for i in range(g)]

    def row(i: int) -> list[tuple]:
        e0 = pts[i]
        out = []
        for e1 in pts:
            ch = channels.BinaryChannel(e0, e1)
            c1, c2 = channels.capacity_closed_form(ch), channels.capacity_optimized(ch)
            out.append((e0, e1, c1, c2, abs(c1 - c2), channels.channel_tvd(ch)))
        return out

    return [r for chunk in ctx.map_trials(row, g) for r in chunk]


def _ambiguity(ctx: Context) -> list[tuple]:
    rows = []
    for case, product in (("entangled", False), ("product", True)):
        demo = nonlinear.schmidt_ambiguity_demo(product)
        rows.append((case, _ket(demo.computational.amps), _ket(demo.hadamard.amps), demo.distance))
    return rows


def _ket(amps: np.ndarray) -> str:
    return " ".join(format(complex(round(a.real, 12), round(a.imag, 12)), "g") for a in amps)


def _p(name: str, kind: str, default: str, help: str, choices: tuple[str, ...] = ()) -> ParamSpec:
    return ParamSpec(name, kind, default, help, choices)


REGISTRY: dict[str, Experiment] = {e.name: e for e in [
    Experiment("fsp-capacity", "Thm A.1", "signaling channel of diag(1, kappa) against the quadratic capacity bound",
               (_p("kappas", "floats", "1.01,1.02,1.05,1.1,1.2", "condition numbers"),
                _p("direction", "str", "alice_to_bob", "signaling direction", ("alice_to_bob", "bob_to_alice"))),
               ("kappa", "delta", "eps0", "eps1", "capacity", "capacity_optimized", "bound_3_8ln2", "ratio", "bound_ok"),
               _fsp_capacity),
    Experiment("fsp-search", "Thm A.4", "single-query search by iterated non-unitary amplification",
               (_p("n", "int", "16", "register qubits"), _p("kappa", "float", "1.1", "condition number"),
                _p("trials", "int", "100", "independent runs"), _p("samples", "int", "100", "final measurements"),
                _p("target", "float", "0.3", "trace distance before measuring")),
               ("trial", "s", "decision", "correct", "map_applications", "queries"),
               _fsp_search),
    Experiment("bbbv", "Thm A.3", "hybrid-argument quantities for Grover search",
               (_p("N", "int", "16", "items"), _p("q", "int", "3", "queries")),
               ("k", "C_k", "D_k", "R_k", "D_bound", "c_bound_ok", "d_bound_ok", "success", "eta_N"),
               _bbbv),
    Experiment("born-gadget", "Thm B.3", "teleportation with the outcome forced by the ancilla gadget",
               (_p("delta", "float", "1.0", "Born-rule deviation"), _p("n", "int", "8", "target leakage 2^-n"),
                _p("trials", "int", "100", "random input qubits")),
               ("trial", "fidelity", "k", "leakage", "threshold", "ok"),
               _born_gadget),
    Experiment("born-bounds", "Thm B.2", "search overhead per deviation and the signaling lower bound",
               (_p("deltas", "floats", "0.5,0.25", "Born-rule deviations"), _p("n", "int", "10", "search qubits"),
                _p("trials", "int", "100", "search runs per deviation"),
                _p("signal_qubits", "int", "4", "qubits in the signaling scan"),
                _p("signal_trials", "int", "200", "random protocols per deviation")),
               ("delta", "k", "k_ratio", "errors", "trials", "max_queries", "max_signal_tvd", "delta_bound", "bound_ok"),
               _born_bounds),
    Experiment("clone-search", "Thm C.1", "single-query search with the CNOT-clone map",
               (_p("ns", "ints", "8,12,16,20", "register sizes"), _p("trials", "int", "1000", "runs per size")),
               ("n", "trials", "errors", "success_rate", "max_iterations", "max_queries"),
               _clone_search),
    Experiment("clone-signal", "App. C", "signaling by cloning half of an EPR pair",
               (_p("ks", "ints", "3,5,8", "qubits read by Bob"), _p("trials", "int", "10000", "runs per k")),
               ("k", "eps0", "eps1", "freq_unmeasured", "sigma", "z", "freq_measured"),
               _clone_signal),
    Experiment("haar-overlap", "App. D", "mean square overlap of a Haar state with its one-qubit Pauli image",
               (_p("n", "int", "4", "qubits"), _p("samples", "int", "10000", "Haar samples"),
                _p("op", "str", "x", "Pauli on the first qubit", ("x", "z"))),
               ("n", "N", "samples", "mc", "exact", "stderr", "z"),
               _haar_overlap),
    Experiment("nlamp", "Thm E.1", "magnification estimate and state separation for normalized diag(1, kappa)",
               (_p("kappas", "floats", "1.1,1.5,2", "condition numbers"),
                _p("log2_initial", "float", "-20", "log2 of the initial angle"),
                _p("target", "float", "0.3", "trace distance target"),
                _p("samples", "int", "1000", "seed pairs for the estimate")),
               ("kappa", "r", "rel_err", "iterations", "iteration_cap", "final_distance"),
               _nlamp),
    Experiment("channel-grid", "App. A", "closed-form against optimized capacity on a flip-probability grid",
               (_p("grid", "int", "99", "points per axis"),),
               ("eps0", "eps1", "closed_form", "optimized", "abs_diff", "tvd"),
               _channel_grid),
    Experiment("ambiguity", "App. F", "reset rule applied through two decompositions of one state",
               (),
               ("case", "state_computational", "state_hadamard", "distance"),
               _ambiguity),
]}


def list_experiments() -> list[dict[str, Any]]:
    return [{
        "name": e.name,
        "anchor": e.anchor,
        "description": e.description,
        "params": [{"name": p.name, "type": p.kind, "default": p.default, "help": p.help,
                    **({"choices": list(p.choices)} if p.choices else {})} for p in e.params],
        "columns": list(e.columns),
    } for e in REGISTRY.values()]


def get_experiment(name: str) -> Experiment:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownExperiment(name) from None


def run_experiment(cfg: ExperimentConfig, record_time: bool = False) -> ResultTable:
    exp = get_experiment(cfg.experiment)
    params = exp.resolve(cfg.params)
    ctx = Context(params, int(cfg.seed), worker_count())
    start = time.perf_counter()
    rows = exp.run(ctx)
    wall = (time.perf_counter() - start) * 1000.0
    meta = {
        "config": {"experiment": exp.name, "anchor": exp.anchor,
                   "params": {p.name: cfg.params.get(p.name, p.default) for p in exp.params}},
        "seed": int(cfg.seed),
        "version": VERSION,
        "wall_ms": round(wall, 3) if record_time else None,
    }
    return ResultTable(exp.columns, [tuple(_plain(v) for v in r) for r in rows], meta)


def _plain(v: Any) -> Any:
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


# -- serialization -------------------------------------------------------------

def _cell(v: Any) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def to_json(table: ResultTable) -> str:
    doc = {"meta": table.meta, "rows": table.records()}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def read_csv(text: str) -> tuple[list[str], list[list[str]]]:
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def serialize(table: ResultTable, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(table)
    if fmt == "json":
        return to_json(table)
    raise ValueError(f"unknown format {fmt!r}")


def write_table(table: ResultTable, fmt: str, out: str | None) -> str:
    text = serialize(table, fmt)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def summarize(names: Sequence[str] | None = None) -> str:
    lines = []
    for entry in list_experiments():
        if names and entry["name"] not in names:
            continue
        params = ", ".join(f"{p['name']}={p['default']}" for p in entry["params"]) or "no parameters"
        lines.append(f"{entry['name']:<14} [{entry['anchor']}] {entry['description']} ({params})")
    return "\n".join(lines)
