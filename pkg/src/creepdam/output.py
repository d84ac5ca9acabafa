"""Writers for run outputs: CSV time series, legacy VTK snapshots, summaries.

All files are first written to a staging directory next to the target and
moved into place only after everything succeeded, so a failed run leaves the
output directory as it was. No timestamps are written; re-running a scenario
reproduces the files byte for byte.
"""
from __future__ import annotations

import csv
import glob
import io
import math
import os
import shutil
import tempfile

import numpy as np

from . import fem
from .driver import RunResult, State, StepReport
from .geometry import Mesh
from .material import MaterialParams, von_mises

TIMESERIES_COLUMNS = ("t", "dt", "max_omega", "min_one_minus_omega", "grad_omega_lp", "lambda",
                      "max_vm_stress", "picard_iters", "contraction_ratio", "w1p_omega",
                      "sup_eps_cr")
SWEEP_COLUMNS = ("value", "t_star", "lambda_0", "lambda_095", "picard_mean_iters", "status")


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def timeseries_row(report: StepReport) -> list:
    d = report.diagnostics
    return [_num(report.t), _num(report.dt), _num(d.max_omega), _num(d.min_one_minus_omega),
            _num(d.grad_omega_lp), _num(d.lambda_), _num(d.max_vm_stress),
            _num(report.picard_iters), _num(report.contraction_ratio), _num(d.w1p_omega),
            _num(d.sup_eps_cr)]


def timeseries_text(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TIMESERIES_COLUMNS)
    for r in result.reports:
        w.writerow(timeseries_row(r))
    return buf.getvalue()


def read_timeseries(path) -> dict:
    """Columns of a ``timeseries.csv`` as float arrays."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in row] for row in body], dtype=float).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def nodal_von_mises(mesh: Mesh, params: MaterialParams, state: State) -> np.ndarray:
    sig = fem.stress_field(mesh, params, state.u, state.eps_cr, np.clip(state.omega, 0.0, 1.0))
    return fem.nodal_average(mesh, von_mises(sig))


def vtk_text(mesh: Mesh, params: MaterialParams, state: State, title: str = "creepdam") -> str:
    """Legacy ASCII unstructured grid with nodal ``omega``, ``von_mises``, ``displacement``."""
    n, ne = mesh.n_nodes, mesh.n_elements
    vm = nodal_von_mises(mesh, params, state)
    out = ["# vtk DataFile Version 3.0", f"{title} t={_num(state.t)}", "ASCII",
           "DATASET UNSTRUCTURED_GRID", f"POINTS {n} double"]
    out += [f"{_num(x)} {_num(y)} 0.0" for x, y in mesh.nodes]
    out.append(f"CELLS {ne} {4 * ne}")
    out += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    out.append(f"CELL_TYPES {ne}")
    out += ["5"] * ne
    out += [f"POINT_DATA {n}", "SCALARS omega double 1", "LOOKUP_TABLE default"]
    out += [_num(v) for v in state.omega]
    out += ["SCALARS von_mises double 1", "LOOKUP_TABLE default"]
    out += [_num(v) for v in vm]
    out.append("VECTORS displacement double")
    out += [f"{_num(ux)} {_num(uy)} 0.0" for ux, uy in state.u]
    return "\n".join(out) + "\n"


def summary_text(name: str, result: RunResult) -> str:
    final_lambda = result.reports[-1].diagnostics.lambda_
    lines = [
        f"scenario = {name}",
        f"termination = {result.termination.value}",
        f"t_star = {_num(result.t_star) if result.t_star is not None else 'none'}",
        f"t_final = {_num(result.t_final)}",
        f"final_lambda = {_num(final_lambda)}",
        f"steps = {len(result.steps)}",
        f"critical_node = {result.critical_node if result.critical_node is not None else 'none'}",
        f"empirical_imbedding_constant = {_num(result.empirical_imbedding_constant)}",
    ]
    if result.message:
        lines.append(f"message = {' '.join(result.message.split())}")
    return "\n".join(lines) + "\n"


def read_summary(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if "=" in line:
                key, value = line.split("=", 1)
                out[key.strip()] = value.strip()
    return out


def sweep_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        status = r.termination if r.error is None else f"Error: {' '.join(r.error.split())}"
        w.writerow([_num(r.value), _num(r.t_star), _num(r.lambda0), _num(r.lambda_late),
                    _num(r.picard_mean_iters), status])
    return buf.getvalue()


def sweep_row_summary(name: str, param: str, row) -> str:
    lines = [f"scenario = {name}", f"{param} = {_num(row.value)}",
             f"termination = {row.termination}",
             f"t_star = {'none' if math.isnan(row.t_star) else _num(row.t_star)}",
             f"t_final = {_num(row.t_final)}",
             f"final_lambda = {_num(row.lambda_final)}"]
    if row.error:
        lines.append(f"message = {' '.join(row.error.split())}")
    return "\n".join(lines) + "\n"


class StagedOutput:
    """Collects files in a staging directory and moves them into ``target`` on commit.

    ``stale`` lists glob patterns of files in ``target`` that belong to the
    output set and are removed on commit, so that a shorter re-run does not
    leave snapshots of a longer earlier run behind.
    """

    def __init__(self, target, stale=()):
        self.target = os.path.abspath(target)
        self.stale = tuple(stale)
        self._stage = None
        self._names = []

    def __enter__(self):
        parent = os.path.dirname(self.target)
        os.makedirs(parent, exist_ok=True)
        self._stage = tempfile.mkdtemp(prefix=".staging-", dir=parent)
        return self

    def write(self, name: str, text: str) -> None:
        path = os.path.join(self._stage, name)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self._names.append(name)

    def commit(self) -> None:
        os.makedirs(self.target, exist_ok=True)
        for pattern in self.stale:
            for old in glob.glob(os.path.join(self.target, pattern)):
                if os.path.relpath(old, self.target) not in self._names and os.path.isfile(old):
                    os.remove(old)
        for name in self._names:
            dest = os.path.join(self.target, name)
            os.makedirs(os.path.dirname(dest), exist_ok=True)
            os.replace(os.path.join(self._stage, name), dest)

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.commit()
        shutil.rmtree(self._stage, ignore_errors=True)
        return False
