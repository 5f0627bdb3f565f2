"""Bridge to an external MILP solver through LP and solution files."""
from __future__ import annotations

import shlex
import subprocess
import tempfile
import time
from pathlib import Path

from ..milp.model import MilpModel, MilpSolution, ModelError, emit_lp, parse_solution
from .config import SolverConfig


class ExternalSolverError(RuntimeError):
    pass


def solve_milp_external(model: MilpModel, config: SolverConfig) -> MilpSolution:
    tmpl = config.command
    if not tmpl or "{lp}" not in tmpl or "{sol}" not in tmpl:
        raise ExternalSolverError("external command template must contain {lp} and {sol}")
    start = time.monotonic()
    with tempfile.TemporaryDirectory(prefix="atrplan_") as tmp:
        lp = Path(tmp) / "model.lp"
        sol = Path(tmp) / "model.sol"
        lp.write_text(emit_lp(model))
        cmd = tmpl.replace("{lp}", shlex.quote(str(lp))).replace("{sol}", shlex.quote(str(sol)))
        try:
            proc = subprocess.run(cmd, shell=True, capture_output=True, text=True, timeout=config.time_limit)
        except subprocess.TimeoutExpired:
            return MilpSolution("unknown", stats={"backend": "external", "wall_time": time.monotonic() - start})
        if proc.returncode != 0:
            raise ExternalSolverError(f"solver exited with code {proc.returncode}: {proc.stderr.strip() or proc.stdout.strip()}")
        if not sol.exists():
            raise ExternalSolverError("solver did not write a solution file")
        try:
            out = parse_solution(sol.read_text(), model)
        except ModelError as exc:
            raise ExternalSolverError(f"unparsable solution: {exc}") from None
    out.stats = {"backend": "external", "wall_time": time.monotonic() - start}
    return out
