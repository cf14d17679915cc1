"""Execute configured checks and serialize the results.

The JSON report is deterministic for a fixed config and seed except for the
``timestamp`` and ``timings`` fields.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import CHECKS, RunConfig
from .density import sample_points, parse_density
from .errors import ScalelabError
from .functionals import (
    GradientPowerDensity,
    energy_density,
    parse_functional,
)
from .local import (
    check_box_invariance,
    check_solution_form_coordinate,
    check_solution_form_density,
    check_solution_form_gradient,
    check_ts_form,
    random_boxes,
    residual_one_point_pde,
    residual_two_point_pde,
    sample_point_pairs,
)
from .scaling import (
    check_euler_relation,
    check_integral_representation,
    check_invariance_condition,
    fit_homogeneity_degree,
    invariance_from_fits,
)

CSV_COLUMNS = ("functional", "density", "m", "lambda", "F", "lnlambda", "lnabsF")

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": [
        "version", "config", "homogeneity", "invariance", "euler", "representation",
        "pde_residuals", "box_invariance", "forms", "timings", "timestamp", "summary",
    ],
    "properties": {
        "version": {"type": "string"},
        "config": {"type": "object"},
        "homogeneity": {"type": "array", "items": {"$ref": "#/$defs/entry"}},
        "invariance": {"type": "array", "items": {"$ref": "#/$defs/entry"}},
        "euler": {"type": "array", "items": {"$ref": "#/$defs/entry"}},
        "representation": {"type": "array", "items": {"$ref": "#/$defs/entry"}},
        "pde_residuals": {"type": "array", "items": {"$ref": "#/$defs/entry"}},
        "box_invariance": {"type": "array", "items": {"$ref": "#/$defs/entry"}},
        "forms": {"type": "array", "items": {"$ref": "#/$defs/entry"}},
        "timings": {"type": "object", "additionalProperties": {"type": "number"}},
        "timestamp": {"type": "string"},
        "summary": {
            "type": "object",
            "required": ["passed", "failed", "errored", "all_passed"],
            "properties": {
                "passed": {"type": "integer"},
                "failed": {"type": "integer"},
                "errored": {"type": "integer"},
                "all_passed": {"type": "boolean"},
            },
        },
    },
    "$defs": {
        "entry": {
            "type": "object",
            "required": ["status", "passed"],
            "properties": {
                "status": {"enum": ["ok", "error"]},
                "passed": {"type": "boolean"},
                "error": {"type": "string"},
                "threshold": {"type": ["number", "object"]},
            },
        }
    },
}

SECTION = {
    "homogeneity": "homogeneity",
    "invariance": "invariance",
    "euler": "euler",
    "representation": "representation",
    "pde": "pde_residuals",
    "box": "box_invariance",
    "forms": "forms",
}


def _clean(obj):
    """Make an object JSON-safe: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class _Runner:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.quad = cfg.quad_spec()
        self.th = cfg.thresholds
        self.specs = [parse_functional(f) for f in cfg.functionals]
        self.densities = [parse_density(d) for d in cfg.densities]
        self._fits = {}

    def _guard(self, base, fn):
        """Run one case; engine errors become an errored entry."""
        try:
            entry = fn()
            entry.setdefault("status", "ok")
        except (ScalelabError, ZeroDivisionError, ValueError) as exc:
            entry = {"status": "error", "passed": False, "error": f"{type(exc).__name__}: {exc}"}
        return {**base, **entry}

    def _fit(self, spec, density, m):
        key = (spec.name, density.label, m)
        if key not in self._fits:
            try:
                self._fits[key] = fit_homogeneity_degree(spec, density, m, self.cfg.lambda_set, self.quad)
            except ScalelabError as exc:
                self._fits[key] = exc
        fit = self._fits[key]
        if isinstance(fit, Exception):
            raise fit
        return fit

    def homogeneity(self):
        out = []
        for spec in self.specs:
            for dens in self.densities:
                for m in self.cfg.m_set:
                    def case(spec=spec, dens=dens, m=m):
                        fit = self._fit(spec, dens, m)
                        declared = spec.declared_p(m)
                        err = abs(fit.p_hat - declared)
                        return {"p_hat": fit.p_hat, "declared_p": declared, "abs_error": err,
                                "residual_rms": fit.residual_rms, "sign": fit.sign,
                                "threshold": {"p": self.th["homogeneity_p"], "rms": self.th["homogeneity_rms"]},
                                "passed": err < self.th["homogeneity_p"]
                                and fit.residual_rms < self.th["homogeneity_rms"]}
                    out.append(self._guard({"functional": spec.name, "density": dens.label, "m": m}, case))
        return out

    def invariance(self):
        out = []
        for spec in self.specs:
            for dens in self.densities:
                def case(spec=spec, dens=dens):
                    ms = [float(m) for m in self.cfg.m_set]
                    result = invariance_from_fits(spec, dens, [self._fit(spec, dens, m) for m in ms])
                    m0_hat, q_hat = result.m0_hat, result.q_hat
                    cond = check_invariance_condition(spec, dens, self.quad)
                    ok = (abs(m0_hat - spec.declared_m0) < self.th["m0"]
                          and abs(q_hat - spec.declared_q) < self.th["q"]
                          and cond < self.th["invariance_condition"])
                    return {"m_set": ms, "p_hats": result.p_hats, "q_hat": q_hat, "k_hat": result.k_hat,
                            "m0_hat": m0_hat, "declared_m0": spec.declared_m0,
                            "declared_q": spec.declared_q, "fit_residual": result.fit_residual,
                            "invariance_condition": cond,
                            "threshold": {"m0": self.th["m0"], "q": self.th["q"],
                                          "invariance_condition": self.th["invariance_condition"]},
                            "passed": ok}
                out.append(self._guard({"functional": spec.name, "density": dens.label}, case))
        return out

    def _relation(self, check, key):
        out = []
        for spec in self.specs:
            for dens in self.densities:
                for m in self.cfg.representation_m:
                    def case(spec=spec, dens=dens, m=m):
                        err = check(spec, dens, m, self.quad)
                        return {"relative_error": err, "threshold": self.th[key], "passed": err < self.th[key]}
                    out.append(self._guard({"functional": spec.name, "density": dens.label, "m": m}, case))
        return out

    def euler(self):
        return self._relation(check_euler_relation, "euler")

    def representation(self):
        return self._relation(check_integral_representation, "representation")

    def pde(self):
        out = []
        for di, dens in enumerate(self.densities):
            seed = self.cfg.seed + di
            for spec in self.specs:
                def case(spec=spec, dens=dens, seed=seed):
                    ed = energy_density(spec)
                    m0, wrong = spec.declared_m0, spec.declared_m0 + 1.0
                    if ed.arity == 2:
                        pairs = sample_point_pairs(dens, self.cfg.pairs, seed)
                        good = residual_two_point_pde(ed, dens, m0, pairs)
                        bad = residual_two_point_pde(ed, dens, wrong, pairs)
                    else:
                        pts = sample_points(dens, self.cfg.points, seed)
                        good = residual_one_point_pde(ed, dens, m0, pts)
                        bad = residual_one_point_pde(ed, dens, wrong, pts)
                    ok = good.max_rel_residual < self.th["pde"] and bad.max_rel_residual > self.th["pde_power"]
                    return {"equation_id": good.equation_id, "m0": m0, "report": good.to_dict(),
                            "wrong_m0": wrong, "wrong_report": bad.to_dict(),
                            "threshold": {"pde": self.th["pde"], "power": self.th["pde_power"]},
                            "passed": ok}
                out.append(self._guard({"functional": spec.name, "density": dens.label, "seed": seed}, case))
        return out

    def box(self):
        out = []
        boxes = random_boxes(self.cfg.boxes, self.cfg.seed)
        for spec in self.specs:
            if spec.kind not in ("ne", "tf", "vw"):
                continue
            ed = energy_density(spec)
            for dens in self.densities:
                for bi, (lo, hi) in enumerate(boxes):
                    for lam in self.cfg.box_lambdas:
                        def case(ed=ed, spec=spec, dens=dens, lo=lo, hi=hi, lam=lam):
                            err = check_box_invariance(ed, dens, spec.declared_m0, (lo, hi), lam, self.quad)
                            return {"relative_error": err, "threshold": self.th["box"], "passed": err < self.th["box"]}
                        base = {"functional": spec.name, "density": dens.label, "box_index": bi,
                                "lower": list(lo), "upper": list(hi), "lambda": lam}
                        out.append(self._guard(base, case))
        return out

    def forms(self):
        out = []
        kinds = {s.kind: s for s in self.specs}
        for di, dens in enumerate(self.densities):
            seed = self.cfg.seed + di
            base = {"density": dens.label, "seed": seed}

            def pts(dens=dens, seed=seed):
                return sample_points(dens, self.cfg.points, seed)

            for kind in ("ne", "tf"):
                if kind in kinds:
                    spec = kinds[kind]

                    def case(spec=spec, dens=dens, pts=pts):
                        fit = check_solution_form_density(energy_density(spec), spec.declared_m0, dens, pts())
                        return {"c_hat": fit.c_hat, "spread": fit.spread, "threshold": self.th["form_spread"],
                                "passed": fit.spread < self.th["form_spread"]}
                    out.append(self._guard({**base, "form": "solution_form_density", "functional": spec.name}, case))
            if "vw" in kinds:
                def case(dens=dens, pts=pts):
                    rep = check_ts_form(dens, pts())
                    return {"report": rep.to_dict(), "threshold": self.th["form_identity"],
                            "passed": rep.max_rel_residual < self.th["form_identity"]}
                out.append(self._guard({**base, "form": "solution_form_ts", "functional": "vw"}, case))
            if "ext" in kinds:
                spec = kinds["ext"]

                def case(spec=spec, dens=dens, pts=pts):
                    rep = check_solution_form_coordinate(dens, spec.z, spec.declared_m0, pts())
                    return {"report": rep.to_dict(), "threshold": self.th["form_identity"],
                            "passed": rep.max_rel_residual < self.th["form_identity"]}
                out.append(self._guard({**base, "form": "solution_form_coordinate", "functional": spec.name}, case))

            def grad_case(dens=dens, pts=pts):
                rep = check_solution_form_gradient(GradientPowerDensity(1.5), 1.0, dens, pts())
                worst = max(rep.max_rel_residual, rep.details["form_max_rel_residual"])
                return {"report": rep.to_dict(), "threshold": self.th["form_identity"],
                        "passed": worst < self.th["form_identity"]}
            out.append(self._guard({**base, "form": "gradient_only_pde", "functional": "|grad n|^1.5"}, grad_case))
        return out

    def sweep_rows(self):
        rows = []
        for (fname, dlabel, m), fit in self._fits.items():
            if isinstance(fit, Exception):
                continue
            for lam, energy, (x, y) in zip(fit.lambda_set, fit.energies, fit.log_values):
                rows.append((fname, dlabel, m, lam, energy, x, y))
        return rows


def run(cfg: RunConfig):
    """Run every requested check in declaration order; returns (report, sweep_rows)."""
    cfg.validate()
    runner = _Runner(cfg)
    report = {"version": __version__, "config": cfg.to_dict()}
    for section in SECTION.values():
        report[section] = []
    timings = {}
    for check in CHECKS:
        if check not in cfg.checks:
            continue
        t0 = time.perf_counter()
        report[SECTION[check]] = getattr(runner, check)()
        timings[check] = time.perf_counter() - t0
    entries = [e for s in SECTION.values() for e in report[s]]
    errored = sum(e["status"] == "error" for e in entries)
    passed = sum(bool(e["passed"]) for e in entries)
    report["summary"] = {"passed": passed, "failed": len(entries) - passed - errored,
                         "errored": errored, "all_passed": passed == len(entries)}
    report["timings"] = timings
    report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    return _clean(report), runner.sweep_rows()


def exit_status(report) -> int:
    return 0 if report["summary"]["all_passed"] else 1


def emit(report, json_path=None, csv_path=None, rows=()):
    """Write the JSON report and the sweep CSV. Floats in CSV use 17 significant digits."""
    written = []
    if json_path:
        path = Path(json_path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(report, indent=2, sort_keys=False) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write JSON report to {path}: {exc}") from exc
        written.append(path)
    if csv_path:
        path = Path(csv_path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(CSV_COLUMNS)
                for fname, dlabel, m, lam, energy, x, y in rows:
                    writer.writerow([fname, dlabel, f"{m:.17g}", f"{lam:.17g}", f"{energy:.17g}",
                                     f"{x:.17g}", f"{y:.17g}"])
        except OSError as exc:
            raise OSError(f"cannot write CSV sweep to {path}: {exc}") from exc
        written.append(path)
    return written
