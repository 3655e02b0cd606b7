"""Polynomial Liénard systems, their canonical form and rotation determinants.

The systems handled here are

    x' = y
    y' = -x (1 + b_1 x + ... + b_{2l} x^{2l}) + y (a_0 + a_1 x + ... + a_{2k} x^{2k})

so the restoring force is ``g(x) = x * (1 + sum b_j x^j)`` and the damping
polynomial multiplying ``y`` is ``a(x) = sum a_i x^i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

# pairwise separation below which two real roots are treated as one multiple root
ROOT_SEPARATION = 1e-7


@dataclass(frozen=True)
class Polynomial:
    """Dense real polynomial, ``coeffs[i]`` multiplies ``x**i``."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Iterable[float]):
        c = [float(v) for v in coeffs]
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        if not c:
            c = [0.0]
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.coeffs == (0.0,)

    def __call__(self, x):
        acc = np.zeros_like(x, dtype=float) if isinstance(x, np.ndarray) else 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial([0.0])
        return Polynomial([i * c for i, c in enumerate(self.coeffs) if i > 0])

    def antiderivative(self) -> "Polynomial":
        """Antiderivative vanishing at 0."""
        return Polynomial([0.0] + [c / (i + 1) for i, c in enumerate(self.coeffs)])

    def __add__(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0.0,) * (n - len(self.coeffs))
        b = other.coeffs + (0.0,) * (n - len(other.coeffs))
        return Polynomial([u + v for u, v in zip(a, b)])

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(np.convolve(self.coeffs, other.coeffs))

    def real_roots(self, separation: float = ROOT_SEPARATION) -> list[tuple[float, bool]]:
        """Real roots in ascending order as ``(root, possibly_multiple)`` pairs.

        Eigenvalues of the companion matrix give the candidates; nearly-real
        ones are polished with Newton steps.  Candidates that polish to within
        ``separation`` of each other are merged and flagged as multiple.
        """
        if self.is_zero():
            raise ValueError("the zero polynomial has no isolated roots")
        if self.degree == 0:
            return []
        dp = self.derivative()
        scale = max(abs(c) for c in self.coeffs)
        candidates = []
        for z in np.roots(self.coeffs[::-1]):
            if abs(z.imag) > 1e-6 * (1.0 + abs(z)):
                continue
            x = float(z.real)
            for _ in range(50):
                d = dp(x)
                if d == 0.0:
                    break
                step = self(x) / d
                x -= step
                if abs(step) <= 1e-16 * (1.0 + abs(x)):
                    break
            # Newton may wander for a near-double root; fall back to the eigenvalue
            if abs(self(x)) > abs(self(float(z.real))):
                x = float(z.real)
            if abs(self(x)) <= 1e-8 * scale * (1.0 + abs(x)) ** self.degree:
                candidates.append(x)
        candidates.sort()
        merged: list[list[float]] = []
        for x in candidates:
            if merged and abs(x - merged[-1][-1]) < separation:
                merged[-1].append(x)
            else:
                merged.append([x])
        return [(float(np.mean(group)), len(group) > 1) for group in merged]


@dataclass(frozen=True)
class BivariatePoly:
    """Sparse polynomial in ``x, y``: ``terms[(i, j)]`` multiplies ``x**i * y**j``."""

    terms: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {(int(i), int(j)): float(c) for (i, j), c in self.terms.items() if c != 0.0}
        object.__setattr__(self, "terms", dict(sorted(clean.items())))

    @classmethod
    def monomial(cls, i: int, j: int, coeff: float = 1.0) -> "BivariatePoly":
        return cls({(i, j): coeff})

    @classmethod
    def from_x_poly(cls, p: Polynomial, y_power: int = 0) -> "BivariatePoly":
        return cls({(i, y_power): c for i, c in enumerate(p.coeffs)})

    def __add__(self, other: "BivariatePoly") -> "BivariatePoly":
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, 0.0) + c
        return BivariatePoly(out)

    def __neg__(self) -> "BivariatePoly":
        return BivariatePoly({key: -c for key, c in self.terms.items()})

    def __sub__(self, other: "BivariatePoly") -> "BivariatePoly":
        return self + (-other)

    def __mul__(self, other: "BivariatePoly") -> "BivariatePoly":
        out: dict[tuple[int, int], float] = {}
        for (i1, j1), c1 in self.terms.items():
            for (i2, j2), c2 in other.terms.items():
                key = (i1 + i2, j1 + j2)
                out[key] = out.get(key, 0.0) + c1 * c2
        return BivariatePoly(out)

    def __call__(self, x, y):
        total = 0.0
        for (i, j), c in self.terms.items():
            total = total + c * x**i * y**j
        return total

    def __eq__(self, other) -> bool:
        if not isinstance(other, BivariatePoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((i + j for i, j in self.terms), default=0)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (i, j), c in sorted(self.terms.items(), key=lambda kv: (-(kv[0][0] + kv[0][1]), kv[0])):
            mono = "*".join(
                s for s in (
                    "" if i == 0 else ("x" if i == 1 else f"x^{i}"),
                    "" if j == 0 else ("y" if j == 1 else f"y^{j}"),
                ) if s
            )
            if not mono:
                parts.append(f"{c:g}")
            elif c == 1.0:
                parts.append(mono)
            elif c == -1.0:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{c:g}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def parse_slot(slot: str) -> tuple[str, int]:
    """``'a2' -> ('alpha', 2)``, ``'b1' -> ('beta', 1)``."""
    if len(slot) < 2 or slot[0] not in "ab" or not slot[1:].isdigit():
        raise ValueError(f"bad parameter slot {slot!r}; expected e.g. 'a0', 'a2', 'b1'")
    return ("alpha" if slot[0] == "a" else "beta"), int(slot[1:])


@dataclass(frozen=True)
class LienardSystem:
    k: int
    l: int
    alpha: tuple[float, ...]
    beta: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if self.k < 0 or self.l < 0:
            raise ValueError("k and l must be non-negative")
        if len(self.alpha) != 2 * self.k + 1:
            raise ValueError(f"alpha needs {2 * self.k + 1} entries for k={self.k}, got {len(self.alpha)}")
        if len(self.beta) != 2 * self.l:
            raise ValueError(f"beta needs {2 * self.l} entries for l={self.l}, got {len(self.beta)}")
        if not all(math.isfinite(v) for v in self.alpha + self.beta):
            raise ValueError("coefficients must be finite")

    @property
    def damping(self) -> Polynomial:
        """``a(x)``, the polynomial multiplying ``y`` in ``y'``; also the Jacobian trace on the x-axis."""
        return Polynomial(self.alpha)

    @property
    def restoring(self) -> Polynomial:
        """``g(x) = x (1 + b_1 x + ... + b_{2l} x^{2l})``."""
        return Polynomial((0.0, 1.0) + self.beta)

    def get(self, slot: str) -> float:
        name, idx = parse_slot(slot)
        if name == "alpha":
            return self.alpha[idx]
        if idx < 1:
            raise ValueError("beta slots start at b1")
        return self.beta[idx - 1]

    def with_slot(self, slot: str, value: float) -> "LienardSystem":
        name, idx = parse_slot(slot)
        if name == "alpha":
            alpha = list(self.alpha)
            alpha[idx] = value
            return LienardSystem(self.k, self.l, tuple(alpha), self.beta)
        if idx < 1:
            raise ValueError("beta slots start at b1")
        beta = list(self.beta)
        beta[idx - 1] = value
        return LienardSystem(self.k, self.l, self.alpha, tuple(beta))

    def field_polys(self) -> tuple[BivariatePoly, BivariatePoly]:
        P = BivariatePoly.monomial(0, 1)
        Q = -BivariatePoly.from_x_poly(self.restoring) + BivariatePoly.from_x_poly(self.damping, 1)
        return P, Q

    def to_dict(self) -> dict:
        return {"form": "general", "k": self.k, "l": self.l,
                "alpha": list(self.alpha), "beta": list(self.beta)}


@dataclass(frozen=True)
class CanonicalSystem:
    """Canonical form: odd damping coefficients fixed to 1, even restoring ones to +-1."""

    k: int
    l: int
    alpha_even: tuple[float, ...]
    beta_odd: tuple[float, ...] = ()
    even_signs: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "alpha_even", tuple(float(a) for a in self.alpha_even))
        object.__setattr__(self, "beta_odd", tuple(float(b) for b in self.beta_odd))
        object.__setattr__(self, "even_signs", tuple(int(s) for s in self.even_signs))
        if self.k < 0 or self.l < 0:
            raise ValueError("k and l must be non-negative")
        if len(self.alpha_even) != self.k + 1:
            raise ValueError(f"alpha_even needs {self.k + 1} entries for k={self.k}")
        if len(self.beta_odd) != self.l or len(self.even_signs) != self.l:
            raise ValueError(f"beta_odd and even_signs need {self.l} entries for l={self.l}")
        if any(s not in (1, -1) for s in self.even_signs):
            raise ValueError("even_signs entries must be +1 or -1")

    def with_alpha_even(self, index: int, value: float) -> "CanonicalSystem":
        """Replace the coefficient of ``x**index`` (``index`` even) in the damping."""
        if index % 2 or not 0 <= index <= 2 * self.k:
            raise ValueError(f"a{index} is not an even damping slot for k={self.k}")
        vals = list(self.alpha_even)
        vals[index // 2] = value
        return CanonicalSystem(self.k, self.l, tuple(vals), self.beta_odd, self.even_signs)

    def to_dict(self) -> dict:
        return {"form": "canonical", "k": self.k, "l": self.l,
                "alpha_even": list(self.alpha_even), "beta_odd": list(self.beta_odd),
                "even_signs": list(self.even_signs)}


def vector_field(sys: LienardSystem, point) -> tuple[float, float]:
    x, y = point
    return y, -sys.restoring(x) + y * sys.damping(x)


def expand_canonical(csys: CanonicalSystem) -> LienardSystem:
    alpha = []
    for i in range(2 * csys.k + 1):
        alpha.append(csys.alpha_even[i // 2] if i % 2 == 0 else 1.0)
    beta = []
    for j in range(1, 2 * csys.l + 1):
        beta.append(csys.beta_odd[(j - 1) // 2] if j % 2 else float(csys.even_signs[j // 2 - 1]))
    return LienardSystem(csys.k, csys.l, tuple(alpha), tuple(beta))


def canonical_from(sys: LienardSystem) -> CanonicalSystem:
    """Read a canonical system back out of an expanded one.

    Raises ``ValueError`` if the odd damping slots are not 1 or the even
    restoring slots are not +-1.
    """
    if any(sys.alpha[i] != 1.0 for i in range(1, 2 * sys.k, 2)):
        raise ValueError("odd damping coefficients must all equal 1 in canonical form")
    signs = [sys.beta[j - 1] for j in range(2, 2 * sys.l + 1, 2)]
    if any(s not in (1.0, -1.0) for s in signs):
        raise ValueError("even restoring coefficients must be +-1 in canonical form")
    return CanonicalSystem(
        sys.k, sys.l,
        tuple(sys.alpha[0::2]),
        tuple(sys.beta[0::2]),
        tuple(int(s) for s in signs),
    )


def to_classical(sys: LienardSystem) -> tuple[float, ...]:
    """Coefficients ``(c_1, ..., c_{2k+1})`` of ``x' = y, y' = -x + sum c_i y**i``.

    Only defined for ``l == 0`` (``g(x) = x``).  The coefficients are those of
    the antiderivative of the damping polynomial, ``c_{i+1} = a_i / (i + 1)``.
    The conjugacy is ``(u, v) = (A(x) - y, x)`` with ``A`` that antiderivative.
    """
    if sys.l != 0 or sys.beta:
        raise ValueError("the classical reduction needs g(x) = x, i.e. l = 0")
    return tuple(a / (i + 1) for i, a in enumerate(sys.alpha))


def parametrized_field(sys: LienardSystem, slot: str) -> tuple[list[BivariatePoly], list[BivariatePoly]]:
    """``(P, Q)`` as coefficient lists in a symbolic parameter placed at ``slot``.

    ``P[0] + mu * P[1]`` etc.; the numeric value currently stored at ``slot``
    is replaced by ``mu``.
    """
    base = sys.with_slot(slot, 0.0)
    P0, Q0 = base.field_polys()
    name, idx = parse_slot(slot)
    if name == "alpha":
        Q1 = BivariatePoly.monomial(idx, 1)
    else:
        Q1 = BivariatePoly.monomial(idx + 1, 0, -1.0)
    return [P0, BivariatePoly()], [Q0, Q1]


def rotation_determinant(P: Sequence[BivariatePoly], Q: Sequence[BivariatePoly]) -> BivariatePoly:
    """``P dQ/dmu - Q dP/dmu`` for a field that is affine in ``mu``.

    ``P`` and ``Q`` are coefficient lists in powers of ``mu``.  For an affine
    family the ``mu`` terms cancel, so the result is ``P0 Q1 - Q0 P1``.
    """
    for name, fam in (("P", P), ("Q", Q)):
        if any(not term.is_zero() for term in fam[2:]):
            raise ValueError(f"{name} depends non-linearly on the parameter")
    P0, P1 = (list(P) + [BivariatePoly(), BivariatePoly()])[:2]
    Q0, Q1 = (list(Q) + [BivariatePoly(), BivariatePoly()])[:2]
    return P0 * Q1 - Q0 * P1


def reversible_system(k: int, l: int, beta_odd: Sequence[float], even_signs: Sequence[int]) -> LienardSystem:
    """Canonical system with every even damping coefficient set to zero."""
    return expand_canonical(CanonicalSystem(k, l, (0.0,) * (k + 1), tuple(beta_odd), tuple(even_signs)))


def symmetry_class(sys: LienardSystem) -> str:
    """``'x-axis-symmetric'``, ``'y-axis-symmetric'`` or ``'none'``.

    Zero damping makes the field reversible under ``(x, y, t) -> (x, -y, -t)``;
    an odd damping with an odd ``g`` makes it reversible under
    ``(x, y, t) -> (-x, y, -t)``.  Either way anti-saddles are centers.
    """
    if all(a == 0.0 for a in sys.alpha):
        return "x-axis-symmetric"
    even_alpha_zero = all(a == 0.0 for a in sys.alpha[0::2])
    odd_beta_zero = all(b == 0.0 for b in sys.beta[0::2])
    if even_alpha_zero and odd_beta_zero:
        return "y-axis-symmetric"
    return "none"


def _as_floats(values, key) -> tuple[float, ...]:
    if not isinstance(values, (list, tuple)):
        raise ValueError(f"{key} must be a list")
    return tuple(float(v) for v in values)


def system_from_dict(data: Mapping) -> tuple[LienardSystem, CanonicalSystem | None]:
    """Parse the system JSON object.  Returns the expanded system and, for
    canonical input, the canonical one as well."""
    general = {"alpha", "beta"} & data.keys()
    canonical = {"alpha_even", "beta_odd", "even_signs"} & data.keys()
    form = data.get("form", "canonical" if canonical and not general else "general")
    if form == "general":
        if canonical:
            raise ValueError(f"general form must not carry canonical fields {sorted(canonical)}")
        alpha = _as_floats(data.get("alpha", []), "alpha")
        beta = _as_floats(data.get("beta", []), "beta")
        k = int(data.get("k", (len(alpha) - 1) // 2))
        l = int(data.get("l", len(beta) // 2))
        return LienardSystem(k, l, alpha, beta), None
    if form == "canonical":
        if general:
            raise ValueError(f"canonical form must not carry general fields {sorted(general)}")
        if "alpha_even" not in data:
            raise ValueError("canonical form needs alpha_even")
        alpha_even = _as_floats(data["alpha_even"], "alpha_even")
        beta_odd = _as_floats(data.get("beta_odd", []), "beta_odd")
        k = int(data.get("k", len(alpha_even) - 1))
        l = int(data.get("l", len(beta_odd)))
        signs = data.get("even_signs", [])
        csys = CanonicalSystem(
            k, l, alpha_even, beta_odd,
            tuple(_parse_sign(s) for s in signs),
        )
        return expand_canonical(csys), csys
    raise ValueError(f"unknown system form {form!r}")


def _parse_sign(s) -> int:
    if s in ("+", "+1", 1, 1.0):
        return 1
    if s in ("-", "-1", -1, -1.0):
        return -1
    raise ValueError(f"bad sign {s!r}; use '+' or '-'")
