"""Fock space states and the actions of oscillators, lattice shifts and zero modes."""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple

from .cartan import (
    ZERO_J,
    ZERO_WEIGHT,
    AlgebraParams,
    JVector,
    WeightVector,
    jlattice_pairing,
    simple_root,
    weight_pairing,
)
from .oscillator import OscGen, ZeroMode, comm
from .qscalar import ONE, Scalar, render_scalar


class LatticeLabel(NamedTuple):
    """e^alpha (x) e^beta (x) e^sigma."""

    alpha: WeightVector = ZERO_WEIGHT
    beta: WeightVector = ZERO_WEIGHT
    sigma: JVector = ZERO_J

    def __add__(self, other):
        return LatticeLabel(self.alpha + other.alpha, self.beta + other.beta, self.sigma + other.sigma)

    def __neg__(self):
        return LatticeLabel(-self.alpha, -self.beta, -self.sigma)

    def __sub__(self, other):
        return self + (-other)

    def is_zero(self) -> bool:
        return self.alpha.is_zero() and self.beta.is_zero() and self.sigma.is_zero()

    def to_json(self) -> dict:
        return {"alpha": self.alpha.to_json(), "beta": self.beta.to_json(), "sigma": self.sigma.to_json()}

    def __str__(self):
        def fmt(w):
            if isinstance(w, JVector):
                return "+".join(f"{c}s{s}" for s, c in enumerate(w.comps, 1) if c) or "0"
            bits = [f"{c}e{i}" for i, c in enumerate(w.eps) if c]
            if w.delta:
                bits.append(f"{w.delta}d")
            return "+".join(bits) or "0"

        return f"({fmt(self.alpha)}, {fmt(self.beta)}, {fmt(self.sigma)})"


ZERO_LABEL = LatticeLabel()


class FockMonomial(NamedTuple):
    """Sorted multiset of creation oscillators times a lattice label."""

    oscillators: tuple = ()
    label: LatticeLabel = ZERO_LABEL

    @property
    def degree(self) -> int:
        return -sum(g.mode for g in self.oscillators)

    def __str__(self):
        osc = "*".join(str(g) for g in self.oscillators)
        return f"{osc or '1'}|{self.label}"


def monomial(oscillators=(), label: LatticeLabel = ZERO_LABEL) -> FockMonomial:
    osc = tuple(sorted(oscillators))
    for g in osc:
        if g.mode >= 0:
            raise ValueError("Fock monomials carry creation oscillators only")
    return FockMonomial(osc, label)


class State:
    """Finite Scalar combination of Fock monomials."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for m, c in terms.items():
                if not isinstance(c, Scalar):
                    c = Scalar(c)
                if c:
                    clean[m] = c
        self.terms = clean

    @classmethod
    def _trusted(cls, terms: dict) -> "State":
        obj = object.__new__(cls)
        obj.terms = terms
        return obj

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((m.degree for m in self.terms), default=0)

    def __add__(self, other: "State") -> "State":
        out = dict(self.terms)
        for m, c in other.terms.items():
            prev = out.get(m)
            if prev is None:
                out[m] = c
            else:
                s = prev + c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return State._trusted(out)

    def __neg__(self):
        return State._trusted({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "State":
        if not isinstance(c, Scalar):
            c = Scalar(c)
        if not c:
            return State()
        return State._trusted({m: x * c for m, x in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return self.terms == other.terms

    def truncate(self, D: int) -> "State":
        return State._trusted({m: c for m, c in self.terms.items() if m.degree <= D})

    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda kv: _monomial_key(kv[0]))

    def to_json(self) -> list:
        """Deterministic list of {oscillators, label, coeff} entries."""
        out = []
        for m, c in self.sorted_items():
            out.append(
                {
                    "oscillators": [str(g) for g in m.oscillators],
                    "label": m.label.to_json(),
                    "coeff": render_scalar(c),
                }
            )
        return out

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({render_scalar(c)})*[{m}]" for m, c in self.sorted_items())

    __repr__ = __str__


def _monomial_key(m: FockMonomial):
    lab = m.label
    return (
        m.degree,
        m.oscillators,
        lab.alpha.eps,
        lab.alpha.delta,
        lab.beta.eps,
        lab.beta.delta,
        lab.sigma.comps,
    )


def vacuum(label: LatticeLabel = ZERO_LABEL) -> State:
    return State._trusted({FockMonomial((), label): ONE})


def act_creation(g: OscGen, st: State) -> State:
    if g.mode >= 0:
        raise ValueError("act_creation needs a negative mode")
    out = {}
    for m, c in st.terms.items():
        nm = FockMonomial(tuple(sorted(m.oscillators + (g,))), m.label)
        out[nm] = out[nm] + c if nm in out else c
    return State(out)


def act_annihilation(g: OscGen, st: State, n: int) -> State:
    """Derivation: sum over creation partners with nonzero structure constant."""
    if g.mode <= 0:
        raise ValueError("act_annihilation needs a positive mode")
    out = State()
    for m, c in st.terms.items():
        osc = m.oscillators
        seen = set()
        for idx, h in enumerate(osc):
            if h in seen:
                continue
            seen.add(h)
            k = comm(g, h, n)
            if not k:
                continue
            mult = osc.count(h)
            rest = osc[:idx] + osc[idx + 1 :]
            out = out + State({FockMonomial(rest, m.label): c * k * mult})
    return out


def act_oscillator(g: OscGen, st: State, n: int) -> State:
    if g.mode < 0:
        return act_creation(g, st)
    return act_annihilation(g, st, n)


def lattice_shift(kind: str, index: int, n: int, sign: int = 1) -> LatticeLabel:
    """Label delta of e^{sign*a_i}, e^{sign*b_i} or e^{sign*s}."""
    if kind == "e_a":
        return LatticeLabel(alpha=simple_root(index, n).scale(sign))
    if kind == "e_b":
        return LatticeLabel(beta=WeightVector.basis(index, sign))
    if kind == "e_s":
        return LatticeLabel(sigma=JVector.basis(index, sign))
    raise ValueError(f"unknown lattice operator {kind!r}")


def act_lattice(kind: str, index: int, st: State, n: int, sign: int = 1) -> State:
    """Apply e^{±a_i}, e^{±b_i} or e^{±s}; kind in {e_a, e_b, e_s}."""
    delta = lattice_shift(kind, index, n, sign)
    return State._trusted({FockMonomial(m.oscillators, m.label + delta): c for m, c in st.terms.items()})


def zero_mode_eigenvalue(h: ZeroMode, label: LatticeLabel, n: int) -> Fraction:
    if h.kind == "a0":
        return weight_pairing(simple_root(h.index, n), label.alpha)
    if h.kind == "b0":
        return label.beta.coord(h.index)  # 2 (eps_i|beta)
    if h.kind == "s0":
        return Fraction(jlattice_pairing(JVector.basis(h.index), label.sigma))
    raise ValueError(f"unknown zero mode kind {h.kind!r}")


def default_states(params: AlgebraParams) -> dict[str, State]:
    """Vacuum, single a/b oscillators at mode -1, and three shifted vacua."""
    out = {"vac": vacuum()}
    for fam in ("a", "b"):
        for i in params.nodes:
            for s in params.dirs:
                g = OscGen(fam, i, s, -1)
                out[f"{fam}{i}^({s})(-1)"] = act_creation(g, vacuum())
    n = params.n
    out["e^alpha1"] = vacuum(LatticeLabel(alpha=simple_root(1, n)))
    out["e^eps1"] = vacuum(LatticeLabel(beta=WeightVector.basis(1)))
    out["e^s1"] = vacuum(LatticeLabel(sigma=JVector.basis(1)))
    return out


def state_from_spec(spec: dict, params: AlgebraParams) -> State:
    """Build a state from a config entry.

    Example: {"oscillators": [["a", 1, 1, -1]], "alpha": {"1": 1}, "beta": {"0": 1},
    "sigma": {"1": 1}, "coeff": 1}.  alpha/beta map eps-indices to coefficients,
    sigma maps directions to integers; alpha may carry "delta".
    """
    osc = []
    for entry in spec.get("oscillators", []):
        fam, node, d, mode = entry
        if mode >= 0:
            raise ValueError("state oscillators must have negative modes")
        osc.append(OscGen(str(fam), int(node), int(d), int(mode)))

    def weight(m):
        m = dict(m or {})
        delta = Fraction(str(m.pop("delta", 0)))
        return WeightVector.from_map({int(k): Fraction(str(v)) for k, v in m.items()}, delta)

    sig = spec.get("sigma") or {}
    size = max((int(k) for k in sig), default=0)
    sigma = JVector(tuple(int(sig.get(str(s), sig.get(s, 0))) for s in range(1, size + 1)))
    label = LatticeLabel(weight(spec.get("alpha")), weight(spec.get("beta")), sigma)
    coeff = Fraction(str(spec.get("coeff", 1)))
    return State({monomial(osc, label): coeff})
