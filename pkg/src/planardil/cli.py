"""Batch command-line front end.

A job is a JSON document read from ``--job PATH`` or stdin::

    {"schema": 1, "command": "contract",
     "domain": {"kind": "annulus", "inner_radius": 0.5},
     "payload": {...}, "params": {...}}

Complex numbers are ``[re, im]`` pairs (bare reals are accepted), matrices
are row-major nested lists.  Exit codes: 0 completed, 1 malformed job or
invalid input, 2 negative verdict, 3 numerical conditioning failure.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from typing import Callable

import jsonschema
import numpy as np

from . import __version__
from ._jsonio import cmatrix, dumps, parse_cmatrix, parse_complex, parse_cvector, parse_targets
from .errors import ConditioningError, PlanarDilError

EXIT_OK, EXIT_INPUT, EXIT_NEGATIVE, EXIT_CONDITIONING = 0, 1, 2, 3

COMMANDS = ("kernel", "pick", "contract", "dilate", "charfn", "opspace-experiment", "factorize")
SAMPLING_COMMANDS = ("opspace-experiment",)

_complex = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}

JOB_SCHEMA = {
    "type": "object",
    "required": ["schema", "command", "domain", "payload"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": 1},
        "command": {"enum": list(COMMANDS)},
        "domain": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["disk", "annulus"]},
                "inner_radius": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
            "if": {"properties": {"kind": {"const": "annulus"}}},
            "then": {"required": ["inner_radius"]},
        },
        "payload": {"type": "object"},
        "params": {
            "type": "object",
            "properties": {
                "N": {"type": "integer", "minimum": 1},
                "grid_size": {"type": "integer", "minimum": 1},
                "sample_count": {"type": "integer", "minimum": 0},
                "max_degree": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "quadrature": {"type": "integer", "minimum": 4},
                "points": {"type": "integer", "minimum": 1},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
                "extremal_samples": {"type": "integer", "minimum": 0},
            },
        },
    },
}

_nodes = {"type": "array", "items": _complex, "minItems": 1}
_matrix = {"type": "array", "items": {"type": "array", "items": _complex}, "minItems": 1}

PAYLOAD_SCHEMAS = {
    "kernel": {
        "type": "object",
        "required": ["mode"],
        "properties": {
            "mode": {"enum": ["eval", "verify"]},
            "shift": {"type": "number"},
            "pairs": {"type": "array", "items": {"type": "array", "items": _complex, "minItems": 2, "maxItems": 2}},
            "test_exponents": {"type": "array", "items": {"type": "integer"}},
        },
        "if": {"properties": {"mode": {"const": "eval"}}},
        "then": {"required": ["pairs"]},
    },
    "pick": {
        "type": "object",
        "required": ["mode"],
        "properties": {
            "mode": {"enum": ["feasibility", "extremal_s", "extremal_t"]},
            "nodes": _nodes,
            "targets": {"type": "array"},
            "z1": _complex, "z2": _complex, "z": _complex,
        },
        "allOf": [
            {"if": {"properties": {"mode": {"const": "feasibility"}}}, "then": {"required": ["nodes", "targets"]}},
            {"if": {"properties": {"mode": {"const": "extremal_s"}}}, "then": {"required": ["z1", "z2"]}},
            {"if": {"properties": {"mode": {"const": "extremal_t"}}}, "then": {"required": ["z"]}},
        ],
    },
    "contract": {
        "type": "object",
        "required": ["model"],
        "properties": {
            "model": {"enum": ["A", "B", "general"]},
            "z1": _complex, "z2": _complex, "z": _complex,
            "s": {"type": "number", "minimum": 0},
            "t": {"type": "number", "minimum": 0},
            "mu": _complex, "lambda": _complex,
            "matrix": _matrix,
        },
        "allOf": [
            {"if": {"properties": {"model": {"const": "A"}}}, "then": {"required": ["z1", "z2", "s", "mu"]}},
            {"if": {"properties": {"model": {"const": "B"}}}, "then": {"required": ["z", "t", "lambda"]}},
            {"if": {"properties": {"model": {"const": "general"}}}, "then": {"required": ["matrix"]}},
        ],
    },
    "dilate": {
        "type": "object",
        "required": ["case"],
        "properties": {
            "case": {"enum": ["distinct", "jet"]},
            "z1": _complex, "z2": _complex, "z": _complex,
            "mu": _complex, "lambda": _complex,
            "shift": {"type": "number"},
            "weighted": {"type": "boolean"},
        },
        "allOf": [
            {"if": {"properties": {"case": {"const": "distinct"}}}, "then": {"required": ["z1", "z2", "mu"]}},
            {"if": {"properties": {"case": {"const": "jet"}}}, "then": {"required": ["z", "lambda"]}},
        ],
    },
    "charfn": {
        "type": "object",
        "required": ["z1", "z2", "mu"],
        "properties": {"z1": _complex, "z2": _complex, "mu": _complex, "compare_mu": _complex},
    },
    "opspace-experiment": {
        "type": "object",
        "required": ["matrix"],
        "properties": {
            "matrix": _matrix,
            "nodes": _nodes,
            "levels": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        },
    },
    "factorize": {
        "type": "object",
        "required": ["matrix"],
        "properties": {"matrix": _matrix, "nodes": _nodes},
    },
}


class JobError(Exception):
    """Malformed job; ``path`` points at the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _path(prefix: list, err: jsonschema.ValidationError) -> str:
    parts = prefix + list(err.absolute_path)
    return "/" + "/".join(str(p) for p in parts)


def validate_job(job) -> None:
    v = jsonschema.Draft202012Validator(JOB_SCHEMA)
    errors = sorted(v.iter_errors(job), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise JobError(_path([], e), e.message)
    pv = jsonschema.Draft202012Validator(PAYLOAD_SCHEMAS[job["command"]])
    errors = sorted(pv.iter_errors(job["payload"]), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise JobError(_path(["payload"], e), e.message)
    params = job.get("params", {})
    if job["command"] in SAMPLING_COMMANDS and "seed" not in params:
        raise JobError("/params/seed", "a seed is required for sampling commands")
    if job["command"] == "contract" and params.get("sample_count", 0) > 0 and "seed" not in params:
        raise JobError("/params/seed", "a seed is required when sample_count > 0")


def _domain(job):
    from .domain_kernels import PlanarDomain

    d = job["domain"]
    return PlanarDomain.disk() if d["kind"] == "disk" else PlanarDomain.annulus(float(d["inner_radius"]))


def _matrix_of(payload) -> np.ndarray:
    try:
        return parse_cmatrix(payload["matrix"])
    except ValueError as e:
        raise JobError("/payload/matrix", str(e)) from None


# ----------------------------------------------------------------- commands


def cmd_kernel(job, ctx):
    from .domain_kernels import (
        DEFAULT_TRUNCATION, REPRODUCING_TOL, KernelIndex, TruncatedKernel,
        build_quadrature, dump_kernel_csv, kernel_eval, verify_reproducing,
    )

    dom, p, pl = _domain(job), job.get("params", {}), job["payload"]
    N = p.get("N", DEFAULT_TRUNCATION)
    K = TruncatedKernel(dom, KernelIndex.for_domain(dom, pl.get("shift", 0.0)), N)
    out = {"N": N, "index": list(K.index.exponents)}
    if pl["mode"] == "eval":
        pairs = [(parse_complex(a), parse_complex(b)) for a, b in pl["pairs"]]
        out["values"] = [[cmatrix(z), cmatrix(w), cmatrix(kernel_eval(K, z, w))] for z, w in pairs]
        out["tail_bounds"] = [K.tail_bound(z, w) for z, w in pairs]
        if ctx["csv"]:
            buf = io.StringIO()
            dump_kernel_csv(K, pairs, buf)
            ctx["csv_text"] = buf.getvalue()
        return out, EXIT_OK
    P = p.get("quadrature", 512)
    exps = pl.get("test_exponents", list(range(-5, 6)) if not dom.is_disk else list(range(0, 8)))
    defect = verify_reproducing(K, build_quadrature(dom, P), exps)
    out.update({"quadrature": P, "test_exponents": exps, "defect": defect, "tolerance": REPRODUCING_TOL})
    out["passed"] = defect < REPRODUCING_TOL
    return out, EXIT_OK if out["passed"] else EXIT_NEGATIVE


def cmd_pick(job, ctx):
    from .domain_kernels import DEFAULT_TRUNCATION, PSD_TOL
    from .pick_interpolation import DEFAULT_GRID, PickProblem, extremal_s, extremal_t, feasibility

    dom, p, pl = _domain(job), job.get("params", {}), job["payload"]
    N, grid = p.get("N", DEFAULT_TRUNCATION), p.get("grid_size", DEFAULT_GRID)
    out = {"N": N, "grid_size": grid}
    if pl["mode"] == "feasibility":
        nodes = parse_cvector(pl["nodes"])
        targets = parse_targets(pl["targets"])
        v = feasibility(PickProblem(dom, nodes, targets), grid, N, threads=ctx["threads"])
        out.update({
            "feasible": v.feasible, "min_eigenvalue": v.min_eigenvalue, "trace": v.trace,
            "grid_resolution": v.grid_resolution, "marginal": v.marginal, "tolerance": PSD_TOL,
            "necessary_only": not dom.is_disk,
            "witness": None if v.feasible else {
                "index": list(v.witness_index.exponents),
                "eigenvalue": v.witness_eigenvalue,
                "vector": cmatrix(v.witness_vector),
            },
            "profile": [[a, lam] for a, lam in v.profile],
        })
        return out, EXIT_OK if v.feasible else EXIT_NEGATIVE
    if pl["mode"] == "extremal_s":
        e = extremal_s(dom, parse_complex(pl["z1"]), parse_complex(pl["z2"]), grid, N)
        out.update({"s_sq": e.s_sq, "m_sq": e.m_sq, "ratio": e.ratio, "alpha0": list(e.alpha0.exponents)})
        return out, EXIT_OK
    out["t"] = extremal_t(dom, parse_complex(pl["z"]), N)
    return out, EXIT_OK


def cmd_contract(job, ctx):
    from .domain_kernels import DEFAULT_TRUNCATION
    from .factorization import exact_two_point_verdict
    from .matrix_homomorphisms import (
        ModelOperatorA, ModelOperatorB, contractivity_A, contractivity_B, vn_sample_check,
    )
    from .pick_interpolation import DEFAULT_GRID

    dom, p, pl = _domain(job), job.get("params", {}), job["payload"]
    N, grid = p.get("N", DEFAULT_TRUNCATION), p.get("grid_size", DEFAULT_GRID)
    tol = p.get("tolerance", 1e-9)
    if pl["model"] == "A":
        T = ModelOperatorA(parse_complex(pl["z1"]), parse_complex(pl["z2"]), float(pl["s"]), parse_complex(pl["mu"]))
        dom.check_interior(*T.nodes)
        v = contractivity_A(T, dom, grid, N)
    elif pl["model"] == "B":
        T = ModelOperatorB(parse_complex(pl["z"]), float(pl["t"]), parse_complex(pl["lambda"]))
        dom.check_interior(*T.nodes)
        v = contractivity_B(T, dom, N)
    else:
        T = _matrix_of(pl)
        dom.check_interior(*np.linalg.eigvals(T))
        v = exact_two_point_verdict(T, dom, grid, N) if T.shape == (2, 2) else None
    out = {"N": N, "grid_size": grid}
    if v is not None:
        out["verdict"] = {"contractive": v.contractive, "reason": v.reason, "value": v.value,
                          "critical": v.critical, "extra": v.extra}
    contractive = None if v is None else v.contractive
    count = p.get("sample_count", 0)
    if count:
        rep = vn_sample_check(T, dom, count, p.get("max_degree", 5), p["seed"])
        out["sampling"] = {
            "max_norm": rep.max_norm, "witness_index": rep.witness_index,
            "witness": rep.witness.to_json() if rep.witness is not None else None,
            "sample_count": count, "seed": p["seed"], "tolerance": tol,
            "lower_bound_only": True,
        }
        if rep.max_norm > 1 + tol:
            contractive = False
    return out, EXIT_NEGATIVE if contractive is False else EXIT_OK


def cmd_dilate(job, ctx):
    from .dilation_builder import (
        hardy_model, verify_dilation, weighted_hardy, witness_distinct, witness_jet,
    )
    from .domain_kernels import KernelIndex, TruncatedKernel, build_quadrature
    from .rational import RationalFunction

    dom, p, pl = _domain(job), job.get("params", {}), job["payload"]
    N = p.get("N", 60 if dom.is_disk else 200)
    tol = p.get("tolerance", 1e-6 if dom.is_disk else 1e-5)
    if pl["case"] == "jet" and pl.get("weighted", False):
        z = parse_complex(pl["z"])
        model = weighted_hardy(dom, z, build_quadrature(dom, p.get("quadrature", 1024)), p.get("N", 60))
    else:
        model = hardy_model(TruncatedKernel(dom, KernelIndex.for_domain(dom, pl.get("shift", 0.0)), N))
    if pl["case"] == "distinct":
        w = witness_distinct(model, parse_complex(pl["z1"]), parse_complex(pl["z2"]), parse_complex(pl["mu"]))
    else:
        w = witness_jet(model, parse_complex(pl["z"]), parse_complex(pl["lambda"]))
    tests = [RationalFunction.identity(), RationalFunction.constant(0.5),
             RationalFunction.polynomial([0.1, 0.2, 0.3])]
    verify = verify_dilation(model, w.vectors, w.compression.conj().T, tests)
    out = {"witness": w.to_json(), "model": model.info, "verify_defect": verify,
           "multiplication_excess": model.multiplication_excess, "tolerance": tol}
    ok = w.defect <= tol and verify <= tol
    out["passed"] = ok
    return out, EXIT_OK if ok else EXIT_NEGATIVE


def cmd_charfn(job, ctx):
    from .characteristic_fn import (
        COINCIDENCE_TOL, CharFn, det_zeros, dump_theta_csv, inner_defect,
        theta_product_at_node, unitary_equiv,
    )

    dom, p, pl = _domain(job), job.get("params", {}), job["payload"]
    if not dom.is_disk:
        raise JobError("/domain/kind", "characteristic functions are available on the disk only")
    c = CharFn(parse_complex(pl["z1"]), parse_complex(pl["z2"]), parse_complex(pl["mu"]))
    points = p.get("points", 64)
    out = {
        "inner_defect": inner_defect(c, 256),
        "product_at_node": cmatrix(theta_product_at_node(c)),
        "det_zeros": cmatrix(det_zeros(c)),
        "points": points,
        "tolerance": COINCIDENCE_TOL,
    }
    if "compare_mu" in pl:
        out["equivalence"] = unitary_equiv(c.mu, parse_complex(pl["compare_mu"]), c.z1, c.z2).to_json()
    if ctx["csv"]:
        buf = io.StringIO()
        dump_theta_csv(c, points, buf)
        ctx["csv_text"] = buf.getvalue()
    return out, EXIT_OK


def cmd_opspace(job, ctx):
    from .factorization import exact_two_point_verdict
    from .matrix_homomorphisms import GeneralOperator
    from .opspace import COUNTEREXAMPLE_TOL, NodeTuple, homeqlin_check, lagrange_matrices, lt_norm_lower_bound

    dom, p, pl = _domain(job), job.get("params", {}), job["payload"]
    T = _matrix_of(pl)
    nodes = parse_cvector(pl["nodes"]) if "nodes" in pl else None
    op = GeneralOperator(T, nodes=nodes, domain=dom)
    z = NodeTuple(dom, op.eigenvalues)
    system = lagrange_matrices(op)
    verdict = exact_two_point_verdict(T, dom).contractive if T.shape == (2, 2) else None
    count, seed, deg = p.get("sample_count", 1000), p["seed"], p.get("max_degree", 5)
    bounds = []
    for k in pl.get("levels", [1]):
        rep = lt_norm_lower_bound(system, z, count, deg, seed, k, p.get("extremal_samples", 0), verdict, ctx["threads"])
        bounds.append(rep.to_json())
    hl = homeqlin_check(T, z, min(count, 1000), deg, seed)
    out = {
        "lagrange": {"partition_defect": system.partition_defect(),
                     "idempotent_defect": system.idempotent_defect(),
                     "resolution_defect": system.resolution_defect()},
        "bounds": bounds,
        "homeqlin": hl.to_json(),
        "exact_contractive": verdict,
        "seed": seed, "sample_count": count, "tolerance": COUNTEREXAMPLE_TOL,
    }
    negative = any(b["bound"] > 1 + COUNTEREXAMPLE_TOL for b in bounds) or verdict is False
    return out, EXIT_NEGATIVE if negative else EXIT_OK


def cmd_factorize(job, ctx):
    from .domain_kernels import DEFAULT_TRUNCATION
    from .factorization import (
        contractivity_pick_test, eigen_kernel, embedding_vectors, schur_certificate,
    )
    from .matrix_homomorphisms import GeneralOperator
    from .pick_interpolation import DEFAULT_GRID

    dom, p, pl = _domain(job), job.get("params", {}), job["payload"]
    T = _matrix_of(pl)
    nodes = parse_cvector(pl["nodes"]) if "nodes" in pl else None
    ek = eigen_kernel(GeneralOperator(T, nodes=nodes, domain=dom))
    N, grid = p.get("N", DEFAULT_TRUNCATION), p.get("grid_size", DEFAULT_GRID)
    scan = schur_certificate(ek, dom, grid, N, threads=ctx["threads"])
    out = {"nodes": cmatrix(ek.nodes), "kernel": cmatrix(ek.gram), "scan": scan.to_json(), "N": N}
    if scan.certificate is not None:
        emb = embedding_vectors(scan.certificate, ek, dom, N)
        out["embedding"] = {"gram_defect": emb.gram_defect, "compression": cmatrix(emb.compression),
                            "compression_defect": emb.compression_defect,
                            "invariance_defect": emb.invariance_defect}
    if p.get("sample_count", 0):
        rep = contractivity_pick_test(ek, dom, p["sample_count"], p.get("max_degree", 5), p.get("seed", 0))
        out["pick_test"] = rep.to_json()
    return out, EXIT_OK if scan.certificate is not None else EXIT_NEGATIVE


HANDLERS: dict[str, Callable] = {
    "kernel": cmd_kernel,
    "pick": cmd_pick,
    "contract": cmd_contract,
    "dilate": cmd_dilate,
    "charfn": cmd_charfn,
    "opspace-experiment": cmd_opspace,
    "factorize": cmd_factorize,
}


def run(job: dict, csv_path: str | None = None, threads: int = 1) -> tuple[dict, int, str | None]:
    """Validate and execute a job; returns ``(report, exit_code, csv_text)``."""
    validate_job(job)
    ctx = {"csv": csv_path is not None, "threads": threads, "csv_text": None}
    body, code = HANDLERS[job["command"]](job, ctx)
    report = {
        "schema": 1,
        "command": job["command"],
        "domain": job["domain"],
        "params": job.get("params", {}),
        "result": body,
        "exit_code": code,
        "version": __version__,
    }
    return report, code, ctx["csv_text"]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="planardil", description=__doc__.splitlines()[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS,
                    help="overrides (or supplies) the job's command field")
    ap.add_argument("--job", help="job JSON file (default: stdin)")
    ap.add_argument("--out", help="write the JSON report here instead of stdout")
    ap.add_argument("--csv", help="write plot data as CSV (kernel eval, charfn)")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed-override", type=int, default=None)
    ap.add_argument("--version", action="version", version=__version__)
    return ap


def _error(message: str, code: int, path: str | None = None) -> int:
    sys.stderr.write(dumps({"error": message, "path": path, "exit_code": code}))
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = open(args.job).read() if args.job else sys.stdin.read()
    except OSError as e:
        return _error(str(e), EXIT_INPUT, "--job")
    try:
        job = json.loads(text)
    except json.JSONDecodeError as e:
        return _error(f"invalid JSON: {e.msg} at line {e.lineno} column {e.colno}", EXIT_INPUT, "/")
    if isinstance(job, dict):
        if args.command:
            job["command"] = args.command
        if args.seed_override is not None:
            job.setdefault("params", {})["seed"] = args.seed_override
    try:
        report, code, csv_text = run(job, args.csv, max(1, args.threads))
    except JobError as e:
        return _error(str(e), EXIT_INPUT, e.path)
    except ConditioningError as e:
        return _error(f"{type(e).__name__}: {e}", EXIT_CONDITIONING)
    except (PlanarDilError, ValueError) as e:
        return _error(f"{type(e).__name__}: {e}", EXIT_INPUT, "/payload")
    text = dumps(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.csv and csv_text is not None:
        with open(args.csv, "w") as fh:
            fh.write(csv_text)
    return code


if __name__ == "__main__":
    sys.exit(main())
