"""Scenario files: TOML in, validated model bundle out, and back.

A scenario file carries the full problem statement in named sections:

    [space]    weights (reference measure), optional labels
    [tree]     levels: nested cells of scenario indices, coarse to fine
    [market]   prices: one length-d vector per cell per level; optional d
    [claim]    payoff: the default terminal claim
    [claims]   optional named payoffs selectable from the command line
    [priors]   vertices: rows spanning the prior polytope
    [utility]  name: EXP | GLUED | custom-table (+ points, u_at_zero)
    [solver]   tol, max_iter, seed (optional; defaults applied)

Parsing is strict: unknown sections or keys fail, structural errors
carry the file name and the line of the offending section, prior
vertices that do not sum to one raise the A1 assumption error, and an
arbitrage probe (no equivalent martingale measure) raises A3 before
any solver runs.  Weight vectors within 1e-9 of total mass one are
renormalized exactly; larger deviations are rejected rather than
silently rescaled.

`emit_scenario` renders the parsed bundle back to canonical text, so
emit-then-parse is the identity on the normalized document.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

try:  # stdlib from 3.11; the backport elsewhere
    import tomllib as _toml
except ImportError:  # pragma: no cover
    import tomli as _toml

from .errors import AssumptionError
from .market import (
    Claim,
    FiltrationTree,
    Market,
    PriorSet,
    ScenarioModel,
    ScenarioSpace,
)
from .martingale import build_constraints, find_equivalent_measure
from .solve import SolverOptions
from .utility import (
    UtilitySpec,
    exponential_utility,
    glued_utility,
    table_utility,
)

__all__ = [
    "ScenarioBundle",
    "ScenarioError",
    "parse_scenario",
    "parse_scenario_text",
    "emit_scenario",
]

SECTION_ORDER = (
    "space",
    "tree",
    "market",
    "claim",
    "claims",
    "priors",
    "utility",
    "solver",
)
REQUIRED_SECTIONS = ("space", "tree", "market", "claim", "priors", "utility")
UTILITY_NAMES = ("EXP", "GLUED", "custom-table")
RENORM_TOL = 1e-9


class ScenarioError(ValueError):
    """Parse or validation failure, anchored to a file location."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = path if line is None else f"{path}:{line}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


@dataclass(frozen=True)
class ScenarioBundle:
    """Validated model bundle plus its canonical document."""

    model: ScenarioModel
    priors: PriorSet
    utility: UtilitySpec
    options: SolverOptions
    named_claims: Mapping[str, np.ndarray]
    document: Mapping[str, dict]

    def claim_named(self, name: Optional[str]) -> Claim:
        """The default claim, or a named one from the [claims] table."""
        if name is None:
            return self.model.claim
        if name not in self.named_claims:
            known = ", ".join(sorted(self.named_claims)) or "none defined"
            raise ScenarioError(f"unknown claim {name!r} (available: {known})")
        return Claim(self.named_claims[name])

    def with_claim(self, name: Optional[str]) -> ScenarioModel:
        claim = self.claim_named(name)
        return ScenarioModel(self.model.space, self.model.market, claim)


def _section_line(text: str, section: str) -> Optional[int]:
    pat = re.compile(r"^\s*\[" + re.escape(section) + r"\]")
    for i, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return i
    return None


def _require_keys(
    raw: Mapping, allowed: Sequence[str], required: Sequence[str],
    where: str, path: str, line: Optional[int],
):
    for key in raw:
        if key not in allowed:
            raise ScenarioError(f"[{where}] has unknown key {key!r}", path, line)
    for key in required:
        if key not in raw:
            raise ScenarioError(f"[{where}] is missing key {key!r}", path, line)


def _float_vector(value, where: str, path: str, line: Optional[int]) -> List[float]:
    if not isinstance(value, list) or not value or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
    ):
        raise ScenarioError(f"[{where}] expects a nonempty list of numbers", path, line)
    return [float(x) for x in value]


def _unit_sum(values: List[float]) -> List[float]:
    """Rescale so math.fsum is exactly 1.0.

    The largest entry absorbs the rounding residual, which keeps the
    map idempotent: a reparse of emitted weights sees an exact unit
    sum and leaves every bit alone.
    """
    out = [float(v) for v in values]
    total = math.fsum(out)
    if total == 1.0:
        return out
    out = [v / total for v in out]
    j = max(range(len(out)), key=lambda i: out[i])
    out[j] = 1.0 - math.fsum(v for i, v in enumerate(out) if i != j)
    return out


def _normalized_weights(
    values: List[float], where: str, path: str, line: Optional[int]
) -> List[float]:
    total = math.fsum(values)
    if not math.isfinite(total) or abs(total - 1.0) > RENORM_TOL:
        raise ScenarioError(
            f"[{where}] weights sum to {total!r}; they must total 1 "
            f"(within {RENORM_TOL} before exact renormalization)",
            path,
            line,
        )
    return _unit_sum(values)


def parse_scenario(path: str) -> ScenarioBundle:
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}", str(path))
    return parse_scenario_text(text, str(path))


def parse_scenario_text(text: str, path: str = "<scenario>") -> ScenarioBundle:
    try:
        raw = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        # the decoder message already carries "at line L, column C"
        raise ScenarioError(f"parse error: {exc}", path)

    anchors = {name: _section_line(text, name) for name in SECTION_ORDER}
    for name in raw:
        if name not in SECTION_ORDER:
            raise ScenarioError(f"unknown section [{name}]", path, _section_line(text, name))
    for name in REQUIRED_SECTIONS:
        if name not in raw:
            raise ScenarioError(f"missing required section [{name}]", path)

    # --- space -----------------------------------------------------------
    sec = raw["space"]
    line = anchors["space"]
    _require_keys(sec, ("weights", "labels"), ("weights",), "space", path, line)
    weights = _normalized_weights(
        _float_vector(sec["weights"], "space", path, line), "space", path, line
    )
    labels = None
    if "labels" in sec:
        if not isinstance(sec["labels"], list) or not all(
            isinstance(s, str) for s in sec["labels"]
        ):
            raise ScenarioError("[space] labels must be a list of strings", path, line)
        labels = tuple(sec["labels"])
    try:
        space = ScenarioSpace(np.array(weights), labels)
    except ValueError as exc:
        raise ScenarioError(f"[space] {exc}", path, line)
    n = space.size

    # --- tree ------------------------------------------------------------
    sec = raw["tree"]
    line = anchors["tree"]
    _require_keys(sec, ("levels",), ("levels",), "tree", path, line)
    levels = sec["levels"]
    try:
        tree = FiltrationTree(levels)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"[tree] {exc}", path, line)
    if tree.n_scenarios != n:
        raise ScenarioError(
            f"[tree] covers {tree.n_scenarios} scenarios but [space] has {n}",
            path,
            line,
        )

    # --- market ----------------------------------------------------------
    sec = raw["market"]
    line = anchors["market"]
    _require_keys(sec, ("prices", "d"), ("prices",), "market", path, line)
    try:
        market = Market(tree, sec["prices"])
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"[market] {exc}", path, line)
    if "d" in sec and int(sec["d"]) != market.n_assets:
        raise ScenarioError(
            f"[market] declares d = {sec['d']} but prices have {market.n_assets} assets",
            path,
            line,
        )

    # --- claim and named claims ------------------------------------------
    sec = raw["claim"]
    line = anchors["claim"]
    _require_keys(sec, ("payoff",), ("payoff",), "claim", path, line)
    payoff = _float_vector(sec["payoff"], "claim", path, line)
    if len(payoff) != n:
        raise ScenarioError(
            f"[claim] payoff has {len(payoff)} entries for {n} scenarios", path, line
        )
    claim = Claim(np.array(payoff))

    named: Dict[str, np.ndarray] = {}
    if "claims" in raw:
        line = anchors["claims"]
        for key, value in raw["claims"].items():
            vec = _float_vector(value, f"claims.{key}", path, line)
            if len(vec) != n:
                raise ScenarioError(
                    f"[claims] {key!r} has {len(vec)} entries for {n} scenarios",
                    path,
                    line,
                )
            named[key] = np.array(vec)

    # --- priors (assumption A1) -------------------------------------------
    sec = raw["priors"]
    line = anchors["priors"]
    _require_keys(sec, ("vertices",), ("vertices",), "priors", path, line)
    rows = sec["vertices"]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ScenarioError("[priors] vertices must be a list of rows", path, line)
    vmat: List[List[float]] = []
    for i, row in enumerate(rows):
        vec = _float_vector(row, "priors", path, line)
        if len(vec) != n:
            raise ScenarioError(
                f"[priors] vertex {i} has {len(vec)} entries for {n} scenarios",
                path,
                line,
            )
        if any(x < 0.0 for x in vec):
            raise AssumptionError(
                "A1",
                f"prior vertex {i} has a negative entry ([priors] in {path})",
            )
        total = math.fsum(vec)
        if abs(total - 1.0) > RENORM_TOL:
            raise AssumptionError(
                "A1",
                f"prior vertex {i} sums to {total!r}, not 1 "
                f"([priors] in {path}, line {line})",
            )
        vmat.append(_unit_sum(vec))
    try:
        priors = PriorSet(np.array(vmat))
    except ValueError as exc:
        raise ScenarioError(f"[priors] {exc}", path, line)

    # --- utility -----------------------------------------------------------
    sec = raw["utility"]
    line = anchors["utility"]
    _require_keys(sec, ("name", "points", "u_at_zero"), ("name",), "utility", path, line)
    uname = sec["name"]
    if uname not in UTILITY_NAMES:
        raise ScenarioError(
            f"[utility] unknown name {uname!r}; expected one of {', '.join(UTILITY_NAMES)}",
            path,
            line,
        )
    udoc: Dict[str, object] = {"name": uname}
    if uname == "custom-table":
        if "points" not in sec:
            raise ScenarioError("[utility] custom-table needs points", path, line)
        pts = sec["points"]
        if not isinstance(pts, list) or not all(
            isinstance(p, list) and len(p) == 2 for p in pts
        ):
            raise ScenarioError(
                "[utility] points must be [x, marginal] pairs", path, line
            )
        u_at_zero = float(sec.get("u_at_zero", 0.0))
        try:
            utility = table_utility(
                [(float(x), float(m)) for x, m in pts], u_at_zero
            )
        except ValueError as exc:
            raise ScenarioError(f"[utility] {exc}", path, line)
        udoc["points"] = [[float(x), float(m)] for x, m in pts]
        udoc["u_at_zero"] = u_at_zero
    else:
        if "points" in sec or "u_at_zero" in sec:
            raise ScenarioError(
                f"[utility] {uname} takes no table parameters", path, line
            )
        utility = exponential_utility() if uname == "EXP" else glued_utility()

    # --- solver ------------------------------------------------------------
    defaults = SolverOptions()
    tol, max_iter, seed = defaults.tol, defaults.max_iter_dual, defaults.seed
    if "solver" in raw:
        sec = raw["solver"]
        line = anchors["solver"]
        _require_keys(sec, ("tol", "max_iter", "seed"), (), "solver", path, line)
        if "tol" in sec:
            tol = float(sec["tol"])
            if not 0.0 < tol < 1.0:
                raise ScenarioError("[solver] tol must lie in (0, 1)", path, line)
        if "max_iter" in sec:
            max_iter = int(sec["max_iter"])
            if max_iter < 1:
                raise ScenarioError("[solver] max_iter must be positive", path, line)
        if "seed" in sec:
            seed = int(sec["seed"])
    options = _options_from(tol, max_iter, seed)

    try:
        model = ScenarioModel(space, market, claim)
    except ValueError as exc:
        raise ScenarioError(str(exc), path)

    # --- assumption A3 probe ------------------------------------------------
    constraints = build_constraints(market)
    if find_equivalent_measure(constraints) is None:
        raise AssumptionError(
            "A3",
            "no equivalent martingale measure supports the market "
            f"(arbitrage; [market] in {path}, line {anchors['market']})",
        )

    document = {
        "space": (
            {"weights": weights, "labels": list(labels)}
            if labels is not None
            else {"weights": weights}
        ),
        "tree": {"levels": [[list(c) for c in cells] for cells in tree.levels]},
        "market": {
            "d": market.n_assets,
            "prices": [[list(map(float, p)) for p in lvl] for lvl in market.prices],
        },
        "claim": {"payoff": payoff},
        "priors": {"vertices": vmat},
        "utility": udoc,
        "solver": {"tol": tol, "max_iter": max_iter, "seed": seed},
    }
    if named:
        document["claims"] = {k: list(map(float, v)) for k, v in named.items()}

    return ScenarioBundle(model, priors, utility, options, named, document)


def _options_from(tol: float, max_iter: int, seed: int) -> SolverOptions:
    # the primal supergradient loop is cheap per step; give it headroom
    return SolverOptions(
        tol=tol,
        max_iter_primal=5 * max_iter,
        max_iter_dual=max_iter,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def _toml_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)  # round-trips exactly; valid TOML float syntax
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, list):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    raise TypeError(f"cannot emit {type(value).__name__}")


_BARE_KEY = re.compile(r"^[A-Za-z0-9_-]+$")


def emit_scenario(bundle: ScenarioBundle) -> str:
    """Render the canonical document; parse(emit(b)) equals b."""
    lines: List[str] = []
    for section in SECTION_ORDER:
        if section not in bundle.document:
            continue
        if lines:
            lines.append("")
        lines.append(f"[{section}]")
        for key, value in bundle.document[section].items():
            name = key if _BARE_KEY.match(key) else _toml_scalar(key)
            lines.append(f"{name} = {_toml_scalar(value)}")
    return "\n".join(lines) + "\n"
