"""Model specification: formation/dissolution term lists and coefficients.

The on-disk model format is line oriented: `[formation]` and `[dissolution]`
section headers, one term per line, with an optional `= <coef>` giving the
coefficient (required for simulation, ignored as a starting value for
fitting).  `#` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .terms import TermSpec, TermError

__all__ = ["ModelSpec", "ModelFileError", "parse_model_file", "parse_term"]


class ModelFileError(ValueError):
    """Malformed model file."""


@dataclass
class ModelSpec:
    """Separable model: independent formation and dissolution blocks.

    The parameter space is the unconstrained product of the two blocks'
    spaces; `eta_map` is a hook for curved parametrizations but only the
    identity mapping is supported.
    """

    formation_terms: list[TermSpec] = field(default_factory=list)
    dissolution_terms: list[TermSpec] = field(default_factory=list)
    theta_plus: np.ndarray | None = None
    theta_minus: np.ndarray | None = None
    eta_map: str = "identity"
    time_blocks: list[list[int]] | None = None

    def __post_init__(self):
        if self.theta_plus is not None:
            self.theta_plus = np.asarray(self.theta_plus, dtype=float)
            if self.theta_plus.shape != (len(self.formation_terms),):
                raise ModelFileError(
                    f"formation coefficients have length {self.theta_plus.size}, "
                    f"expected {len(self.formation_terms)}"
                )
        if self.theta_minus is not None:
            self.theta_minus = np.asarray(self.theta_minus, dtype=float)
            if self.theta_minus.shape != (len(self.dissolution_terms),):
                raise ModelFileError(
                    f"dissolution coefficients have length {self.theta_minus.size}, "
                    f"expected {len(self.dissolution_terms)}"
                )

    def require_identity_eta(self) -> None:
        if self.eta_map != "identity":
            raise ModelFileError(
                f"eta mapping {self.eta_map!r} not supported; only 'identity' is implemented"
            )

    def phase_terms(self, phase: str) -> list[TermSpec]:
        return self.formation_terms if phase == "formation" else self.dissolution_terms

    def phase_theta(self, phase: str) -> np.ndarray | None:
        return self.theta_plus if phase == "formation" else self.theta_minus


_TERM_RE = re.compile(r"^([a-z_][a-z0-9_]*)\s*(?:\(([^)]*)\))?$")

# shorthand sugar that expands to catalog terms
_ALIASES = {
    "homophily": ("mixing", lambda args: (args[0], args[1], args[1])),
    "heterophily": ("mixing", lambda args: tuple(args)),
}


def parse_term(text: str) -> TermSpec:
    m = _TERM_RE.match(text.strip())
    if not m:
        raise ModelFileError(f"cannot parse term {text!r}")
    kind, argstr = m.group(1), m.group(2)
    args: tuple = ()
    if argstr is not None:
        args = tuple(a.strip() for a in argstr.split(",") if a.strip())
    if kind in _ALIASES:
        target, expand = _ALIASES[kind]
        try:
            args = expand(args)
        except IndexError:
            raise ModelFileError(f"wrong number of arguments in {text!r}")
        kind = target
    if kind in ("degree",):
        try:
            args = tuple(int(a) for a in args)
        except ValueError:
            raise ModelFileError(f"degree level must be an integer in {text!r}")
    return TermSpec(kind=kind, args=args)


def parse_model_file(path: str | Path) -> ModelSpec:
    path = Path(path)
    if not path.exists():
        raise ModelFileError(f"model file not found: {path}")
    sections: dict[str, list[tuple[TermSpec, float | None]]] = {
        "formation": [],
        "dissolution": [],
    }
    current: str | None = None
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in sections:
                raise ModelFileError(f"{path}:{lineno}: unknown section [{name}]")
            current = name
            continue
        if current is None:
            raise ModelFileError(
                f"{path}:{lineno}: term outside of [formation]/[dissolution] section"
            )
        if "=" in line:
            term_text, coef_text = line.split("=", 1)
            try:
                coef = float(coef_text.strip())
            except ValueError:
                raise ModelFileError(f"{path}:{lineno}: bad coefficient {coef_text.strip()!r}")
        else:
            term_text, coef = line, None
        try:
            spec = parse_term(term_text)
        except (ModelFileError, TermError) as e:
            raise ModelFileError(f"{path}:{lineno}: {e}") from e
        sections[current].append((spec, coef))

    def block(name):
        specs = [s for s, _ in sections[name]]
        coefs = [c for _, c in sections[name]]
        if specs and all(c is not None for c in coefs):
            return specs, np.array(coefs, dtype=float)
        return specs, None

    f_specs, f_theta = block("formation")
    d_specs, d_theta = block("dissolution")
    return ModelSpec(
        formation_terms=f_specs,
        dissolution_terms=d_specs,
        theta_plus=f_theta,
        theta_minus=d_theta,
    )
