"""Vertex operators as normal-ordered exponential descriptors, and mode extraction.

An ``ExpOperator`` is one normal-ordered block

    pre * exp(sum creat) exp(sum ann) e^shift * prod (var^zmult q^qmult)^{h}

where the zero modes h act on the label the block receives.  An
``OperatorExpression`` is a sum of ordered products of blocks.  ``apply_modes``
turns an expression and a Fock state into the coefficients of the formal
variables inside a finite window.

Two engines are provided.  ``wick`` normal-orders each product first
(contraction series times the merged block) and is the production path.
``sequential`` applies the blocks right to left with explicit truncation and
serves as its oracle.

Exponents are kept internally in quarter units (integers).  Output is the
exact projection onto Fock degree <= D: in normal-ordered form every creation
operator sits to the left, so dropping creation terms of degree > D removes
exactly the components of degree > D.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import product as iproduct
from typing import NamedTuple

from .cartan import AlgebraParams, JVector, WeightVector, d_value, simple_root
from .fock import (
    ZERO_LABEL,
    FockMonomial,
    LatticeLabel,
    State,
    act_annihilation,
    zero_mode_eigenvalue,
)
from .oscillator import OscGen, ZeroMode, comm
from .qscalar import ONE, ZERO, Scalar, q_int, q_power, render_scalar

INF = float("inf")


def _q4(r) -> int:
    r = Fraction(r)
    e = 4 * r
    if e.denominator != 1:
        raise ValueError(f"exponent {r} is not a multiple of 1/4")
    return int(e)


# -- coefficient templates ----------------------------------------------------

DENOMS = ("qint_k_over_d", "qint_neg_half", "plain_k", "qfactor_only")


class CoeffTemplate(NamedTuple):
    """One summand family sign*scale*q^(k*qshift)/denom(k) * osc(+-k) * var^(+-k)."""

    family: str
    node: int
    dir: int
    var: str
    sign: int
    qshift: Fraction
    denom: str
    scale: Scalar = ONE

    def coeff(self, k: int, n: int) -> Scalar:
        return _template_coeff(self, k, n)

    def osc(self, mode: int) -> OscGen:
        return OscGen(self.family, self.node, self.dir, mode)

    def can_pair(self, other: "CoeffTemplate", n: int) -> bool:
        """Structural test: is [self(k), other(-k)] nonzero for some k?"""
        if self.family != other.family or self.dir != other.dir:
            return False
        if self.family == "b":
            return self.node == other.node
        return bool(comm(self.osc(1), other.osc(-1), n))


@lru_cache(maxsize=None)
def _template_coeff(t: CoeffTemplate, k: int, n: int) -> Scalar:
    d = d_value(t.node, n)
    if t.denom == "qint_k_over_d":
        den = q_int(Fraction(k) / d, d)
    elif t.denom == "qint_neg_half":
        den = q_int(-Fraction(k) / (2 * d), d)
    elif t.denom == "plain_k":
        den = Scalar(k)
    elif t.denom == "qfactor_only":
        den = ONE
    else:
        raise ValueError(f"unknown denominator kind {t.denom!r}")
    return q_power(k * t.qshift) * t.scale * t.sign / den


class ZModeEntry(NamedTuple):
    """Factor (var^zmult * q^qmult)^eigenvalue; var None means a pure q-power."""

    mode: ZeroMode
    var: str | None
    zmult: Fraction
    qmult: Fraction


# -- blocks -------------------------------------------------------------------

class ExpOperator:
    """A single normal-ordered exponential block (see module docstring)."""

    __slots__ = ("pre", "creat", "ann", "shift", "zmodes", "monom", "name")

    def __init__(self, pre=ONE, creat=(), ann=(), shift=ZERO_LABEL, zmodes=(), monom=(), name=""):
        self.pre = pre if isinstance(pre, Scalar) else Scalar(pre)
        self.creat = tuple(creat)
        self.ann = tuple(ann)
        self.shift = shift
        self.zmodes = tuple(zmodes)
        self.monom = tuple(sorted(monom))
        self.name = name
        for m in self.monom:
            _q4(m[1])
        for z in self.zmodes:
            _q4(z.zmult)
            _q4(z.qmult)

    @property
    def vars(self) -> tuple:
        out = []
        for t in self.creat + self.ann:
            if t.var not in out:
                out.append(t.var)
        for z in self.zmodes:
            if z.var is not None and z.var not in out:
                out.append(z.var)
        for v, _ in self.monom:
            if v not in out:
                out.append(v)
        return tuple(out)

    @property
    def var(self):
        vs = self.vars
        return vs[0] if len(vs) == 1 else vs

    def _replace(self, **kw) -> "ExpOperator":
        data = {s: getattr(self, s) for s in self.__slots__}
        data.update(kw)
        return ExpOperator(**data)

    def shifted(self, theta) -> "ExpOperator":
        """The block with every variable x replaced by q^theta * x."""
        theta = Fraction(theta)
        if not theta:
            return self
        creat = tuple(t._replace(qshift=t.qshift + theta) for t in self.creat)
        ann = tuple(t._replace(qshift=t.qshift - theta) for t in self.ann)
        zm = tuple(
            z._replace(qmult=z.qmult + theta * z.zmult) if z.var is not None else z for z in self.zmodes
        )
        pre = self.pre * q_power(theta * sum((e for _, e in self.monom), Fraction(0)))
        return self._replace(creat=creat, ann=ann, zmodes=zm, pre=pre)

    def renamed(self, mapping: dict) -> "ExpOperator":
        def r(v):
            return mapping.get(v, v) if v is not None else None

        return self._replace(
            creat=tuple(t._replace(var=r(t.var)) for t in self.creat),
            ann=tuple(t._replace(var=r(t.var)) for t in self.ann),
            zmodes=tuple(z._replace(var=r(z.var)) for z in self.zmodes),
            monom=tuple((r(v), e) for v, e in self.monom),
        )

    def scaled(self, c) -> "ExpOperator":
        return self._replace(pre=self.pre * c)

    def signature(self):
        """Hashable identity of the operator part (everything except pre)."""
        return (self.creat, self.ann, self.shift, self.zmodes, self.monom)

    def __eq__(self, other):
        if not isinstance(other, ExpOperator):
            return NotImplemented
        return self.pre == other.pre and self.signature() == other.signature()

    def __hash__(self):
        return hash((self.pre, self.signature()))

    def __repr__(self):
        return f"ExpOperator({self.name or '?'}, vars={self.vars})"


def normal_merge(*ops: ExpOperator, name: str = "") -> ExpOperator:
    """:A B ...: as one block; zero modes of all factors act on the input label."""
    pre = ONE
    creat, ann, zm, monom = [], [], [], {}
    shift = ZERO_LABEL
    for op in ops:
        pre = pre * op.pre
        creat.extend(op.creat)
        ann.extend(op.ann)
        zm.extend(op.zmodes)
        shift = shift + op.shift
        for v, e in op.monom:
            monom[v] = monom.get(v, 0) + e
    monom = tuple((v, e) for v, e in monom.items() if e)
    return ExpOperator(pre, creat, ann, shift, zm, monom, name or ":" + "".join(o.name for o in ops) + ":")


def shift_pairing(h: ZeroMode, shift: LatticeLabel, n: int) -> Fraction:
    """Eigenvalue change of h produced by e^shift (what moving h across it costs)."""
    return zero_mode_eigenvalue(h, shift, n)


def exchange_factor(A: ExpOperator, B: ExpOperator, n: int):
    """Monomial from writing (zero modes of A) e^{B.shift} as e^{B.shift} (zero modes of A).

    Returns (var -> exponent, q-exponent).
    """
    varexp, qexp = {}, Fraction(0)
    if B.shift == ZERO_LABEL:
        return varexp, qexp
    for z in A.zmodes:
        lam = shift_pairing(z.mode, B.shift, n)
        if not lam:
            continue
        if z.var is not None and z.zmult:
            varexp[z.var] = varexp.get(z.var, 0) + z.zmult * lam
        qexp += z.qmult * lam
    return {v: e for v, e in varexp.items() if e}, qexp


def contraction_pairs(A: ExpOperator, B: ExpOperator, n: int) -> list:
    """Template pairs (ann of A, creat of B) with nonzero commutator."""
    return [(ta, tb) for ta in A.ann for tb in B.creat if ta.can_pair(tb, n)]


def contraction_coeff(pairs, k: int, n: int) -> Scalar:
    """c_k = sum over pairs of coef_A(k) coef_B(k) [a(k), b(-k)]."""
    total = ZERO
    for ta, tb in pairs:
        c = comm(ta.osc(k), tb.osc(-k), n)
        if c:
            total = total + ta.coeff(k, n) * tb.coeff(k, n) * c
    return total


def ordered_merge(*ops: ExpOperator, n: int, name: str = "") -> ExpOperator:
    """Plain product A B ... of blocks on one variable that do not contract.

    Zero-mode exchange monomials are folded into pre and monom.  A nonzero
    contraction between blocks on the same variable would be a constant
    infinite series, which is rejected.
    """
    merged = []
    extra_q = Fraction(0)
    extra_var = {}
    for a, A in enumerate(ops):
        for B in ops[a + 1 :]:
            if contraction_pairs(A, B, n):
                raise ValueError(f"blocks {A.name} and {B.name} contract on a shared variable")
            ve, qe = exchange_factor(A, B, n)
            extra_q += qe
            for v, e in ve.items():
                extra_var[v] = extra_var.get(v, 0) + e
        merged.append(A)
    out = normal_merge(*merged, name=name)
    monom = dict(out.monom)
    for v, e in extra_var.items():
        monom[v] = monom.get(v, 0) + e
    return out._replace(pre=out.pre * q_power(extra_q), monom=tuple((v, e) for v, e in monom.items() if e))


# -- expressions --------------------------------------------------------------

class Term(NamedTuple):
    coeff: Scalar
    varpowers: tuple  # sorted ((var, Fraction), ...)
    factors: tuple  # ExpOperators, left to right


def _vp(d: dict) -> tuple:
    return tuple(sorted((v, Fraction(e)) for v, e in d.items() if e))


class OperatorExpression:
    """Sum of coeff * prod(var^power) * (ordered product of blocks)."""

    __slots__ = ("terms",)

    def __init__(self, terms=()):
        self.terms = tuple(t for t in terms if t.coeff)

    @classmethod
    def single(cls, op: ExpOperator, coeff=ONE, varpowers=None) -> "OperatorExpression":
        coeff = coeff if isinstance(coeff, Scalar) else Scalar(coeff)
        return cls([Term(coeff, _vp(varpowers or {}), (op,))])

    @property
    def vars(self) -> tuple:
        out = []
        for t in self.terms:
            for f in t.factors:
                for v in f.vars:
                    if v not in out:
                        out.append(v)
            for v, _ in t.varpowers:
                if v not in out:
                    out.append(v)
        return tuple(out)

    def __add__(self, other):
        return OperatorExpression(self.terms + other.terms)

    def __neg__(self):
        return OperatorExpression([t._replace(coeff=-t.coeff) for t in self.terms])

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c, varpowers=None) -> "OperatorExpression":
        c = c if isinstance(c, Scalar) else Scalar(c)
        out = []
        for t in self.terms:
            vp = dict(t.varpowers)
            for v, e in (varpowers or {}).items():
                vp[v] = vp.get(v, 0) + Fraction(e)
            out.append(Term(t.coeff * c, _vp(vp), t.factors))
        return OperatorExpression(out)

    def __mul__(self, other: "OperatorExpression") -> "OperatorExpression":
        """Operator product self * other (self to the left)."""
        out = []
        for a in self.terms:
            for b in other.terms:
                vp = dict(a.varpowers)
                for v, e in b.varpowers:
                    vp[v] = vp.get(v, 0) + e
                out.append(Term(a.coeff * b.coeff, _vp(vp), a.factors + b.factors))
        return OperatorExpression(out)

    def renamed(self, mapping: dict) -> "OperatorExpression":
        return OperatorExpression(
            Term(
                t.coeff,
                _vp({mapping.get(v, v): e for v, e in t.varpowers}),
                tuple(f.renamed(mapping) for f in t.factors),
            )
            for t in self.terms
        )

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"OperatorExpression({len(self.terms)} terms, vars={self.vars})"


def compose(exprs) -> OperatorExpression:
    """Ordered product of single-variable expressions, each renamed to its variable."""
    seen = set()
    out = None
    for expr, var in exprs:
        if var in seen:
            raise ValueError(f"variable {var!r} used twice in compose")
        seen.add(var)
        vs = expr.vars
        if len(vs) > 1:
            raise ValueError("compose expects single-variable expressions")
        e = expr.renamed({vs[0]: var}) if vs else expr
        out = e if out is None else out * e
    if out is None:
        raise ValueError("compose needs at least one expression")
    return out


# -- builders -----------------------------------------------------------------

def _sgn(sign) -> int:
    if sign in (1, "+", +1):
        return 1
    if sign in (-1, "-"):
        return -1
    raise ValueError(f"sign must be +1/-1, got {sign!r}")


def build_Z(i: int, s: int, sign, n: int, var: str = "z") -> ExpOperator:
    """Z^{+-}_{i,s}(z): b-oscillators, shift +-eps_i on beta, z^{+-b_i(0)}."""
    e = _sgn(sign)
    creat = (CoeffTemplate("b", i, s, var, e, Fraction(0), "plain_k"),)
    ann = (CoeffTemplate("b", i, s, var, -e, Fraction(0), "plain_k"),)
    shift = LatticeLabel(beta=WeightVector.basis(i, e))
    zm = (ZModeEntry(ZeroMode("b0", i), var, Fraction(e), Fraction(0)),)
    return ExpOperator(ONE, creat, ann, shift, zm, (), f"Z{'+' if e > 0 else '-'}{i},{s}")


def build_Y(i: int, s: int, sign, n: int, var: str = "z") -> ExpOperator:
    """Y^{+-}_{i,s}(z): a-oscillators over [-k/(2d_i)]_i with q^{+-k/4}, e^{+-alpha_i} z^{-+2a_i(0)}."""
    e = _sgn(sign)
    th = Fraction(e, 4)
    creat = (CoeffTemplate("a", i, s, var, e, th, "qint_neg_half"),)
    ann = (CoeffTemplate("a", i, s, var, -e, th, "qint_neg_half"),)
    shift = LatticeLabel(alpha=simple_root(i, n).scale(e))
    zm = (ZModeEntry(ZeroMode("a0", i), var, Fraction(-2 * e), Fraction(0)),)
    return ExpOperator(ONE, creat, ann, shift, zm, (), f"Y{'+' if e > 0 else '-'}{i},{s}")


def build_X_multi(i: int, sign, params: AlgebraParams, var_prefix: str = "z") -> ExpOperator:
    """X^{+-}_i(z_1..z_{N-1}) with one variable per direction."""
    e = _sgn(sign)
    n = params.n
    th = Fraction(-e, 2)
    creat, ann, zm, monom = [], [], [], []
    for s in params.dirs:
        v = f"{var_prefix}{s}"
        creat.append(CoeffTemplate("a", i, s, v, e, th, "qint_k_over_d"))
        # the annihilation sum carries q^{-+k/2} z^{-k}: a plain factor, not an argument shift
        ann.append(CoeffTemplate("a", i, s, v, -e, th, "qint_k_over_d"))
        zm.append(ZModeEntry(ZeroMode("a0", i), v, Fraction(e), Fraction(0)))
        monom.append((v, Fraction(1)))
    shift = LatticeLabel(alpha=simple_root(i, n).scale(e))
    return ExpOperator(ONE, creat, ann, shift, zm, monom, f"X{'+' if e > 0 else '-'}{i}")


def _j_shift(s: int, e: int) -> LatticeLabel:
    return LatticeLabel(sigma=JVector.basis(s, e))


def _s_zero(s: int, qmult) -> ZModeEntry:
    return ZModeEntry(ZeroMode("s0", s), None, Fraction(0), Fraction(qmult))


def build_X_eps(i: int, eps: int, s: int, sign, params: AlgebraParams, var: str = "z") -> OperatorExpression:
    """The composite X^{+-}_{i eps,s}(z) as a single merged block."""
    e = _sgn(sign)
    n = params.n
    if i < 0 or i > n:
        raise IndexError(f"node {i} outside 0..{n}")
    long_node = params.is_long(i)
    if eps not in (-1, 0, 1):
        raise ValueError("eps must be -1, 0 or +1")
    if eps == 0 and not long_node:
        raise ValueError("eps = 0 exists only for the long nodes 0 and n")
    Zs = lambda node, sg, th: build_Z(node, s, sg, n, var).shifted(th)  # noqa: E731
    Y = build_Y(i, s, e, n, var)
    tag = f"X{'+' if e > 0 else '-'}{i}{'+-0'[[1, -1, 0].index(eps)]},{s}"
    if not long_node:
        if e > 0:
            blocks = [Zs(i, 1, Fraction(eps, 2)), Zs(i + 1, -1, 0), Y]
            tail = ExpOperator(ONE, shift=_j_shift(s, 1), zmodes=(_s_zero(s, eps),), name="e^s q^(eps s(0))")
        else:
            blocks = [Zs(i, -1, 0), Zs(i + 1, 1, Fraction(eps, 2)), Y]
            tail = ExpOperator(ONE, shift=_j_shift(s, -1), zmodes=(_s_zero(s, -eps),), name="e^-s q^(-eps s(0))")
        op = ordered_merge(*blocks, tail, n=n, name=tag)
        return OperatorExpression.single(op)
    if e > 0:
        if eps == 0:
            core = normal_merge(Zs(i, 1, 1), Zs(i, 1, -1), Y)
            tail = ExpOperator(ONE, shift=_j_shift(s, 1), name="e^s")
        else:
            core = normal_merge(Zs(i, 1, Fraction(1 + eps, 2)), Zs(i, 1, Fraction(-1 + eps, 2)), Y)
            tail = ExpOperator(ONE, shift=_j_shift(s, 1), zmodes=(_s_zero(s, 2 * eps),), name="e^s q^(2eps s(0))")
        return OperatorExpression.single(ordered_merge(core, tail, n=n, name=tag))
    # long node, minus: the single product of the theorem (eps is not used)
    raise ValueError("the long-node X^- has no eps-components; use build_theorem_map")


def build_X_long_minus(j: int, s: int, params: AlgebraParams, var: str = "z") -> ExpOperator:
    n = params.n
    zz = normal_merge(build_Z(j, s, -1, n, var).shifted(Fraction(1, 2)), build_Z(j, s, -1, n, var).shifted(Fraction(-1, 2)))
    tail = ExpOperator(ONE, shift=_j_shift(s, -1), zmodes=(_s_zero(s, -1),), name="e^-s q^(-s(0))")
    return ordered_merge(zz, build_Y(j, s, -1, n, var), tail, n=n, name=f"X-{j},{s}")


def theorem_coefficients(i: int, sign, params: AlgebraParams):
    """[(eps, coefficient, z-power)] of the combination defining X^{+-}_{i,s}."""
    e = _sgn(sign)
    h = q_power(Fraction(1, 2)) - q_power(Fraction(-1, 2))
    if not params.is_long(i):
        return [(1, h.inverse(), Fraction(-1)), (-1, -h.inverse(), Fraction(-1))]
    if e < 0:
        return [(None, ONE, Fraction(0))]
    den = -((q_power(1) - q_power(-1)) * h)
    two = q_power(Fraction(1, 2)) + q_power(Fraction(-1, 2))  # [2]_1 read as a short-node q-integer
    return [
        (1, q_power(Fraction(1, 2)) / den, Fraction(-2)),
        (-1, q_power(Fraction(-1, 2)) / den, Fraction(-2)),
        (0, -two / den, Fraction(-2)),
    ]


def build_theorem_map(i: int, s: int, sign, params: AlgebraParams, var: str = "z") -> OperatorExpression:
    """Image X^{+-}_{i,s}(z) of x^{+-}_{i,s}(z) under the representation."""
    e = _sgn(sign)
    terms = []
    for eps, c, zp in theorem_coefficients(i, e, params):
        if eps is None:
            op = build_X_long_minus(i, s, params, var)
        else:
            op = build_X_eps(i, eps, s, e, params, var).terms[0].factors[0]
        terms.append(Term(c, _vp({var: zp}), (op,)))
    return OperatorExpression(terms)


def k_multiplier(i: int, n: int, convention: str = "q_i") -> Fraction:
    """m with K_i = q^(m a_i(0)): d_i for the literal q_i^(a_i(0)), 1 for q^(a_i(0))."""
    if convention == "q_i":
        return d_value(i, n)
    if convention == "q":
        return Fraction(1)
    raise ValueError(f"unknown K convention {convention!r}")


def build_phi_psi(i: int, s: int, kind: str, params: AlgebraParams, var: str = "u",
                  k_convention: str = "q_i") -> ExpOperator:
    """Phi_i^{(s)}(u) (annihilation only, K_i) or Psi_i^{(s)}(u) (creation only, K_i^{-1}).

    K_i acts as q_i^{a_i(0)}, i.e. q^{d_i (alpha_i|alpha)} on e^alpha; with
    k_convention="q" it acts as q^{(alpha_i|alpha)} instead.
    """
    n = params.n
    d = d_value(i, n)
    m = k_multiplier(i, n, k_convention)
    qi = q_power(d) - q_power(-d)
    if kind in ("phi", "Phi", "Φ"):
        ann = (CoeffTemplate("a", i, s, var, 1, Fraction(0), "qfactor_only", qi),)
        zm = (ZModeEntry(ZeroMode("a0", i), None, Fraction(0), m),)
        return ExpOperator(ONE, (), ann, ZERO_LABEL, zm, (), f"Phi{i},{s}")
    if kind in ("psi", "Psi", "Ψ"):
        creat = (CoeffTemplate("a", i, s, var, -1, Fraction(0), "qfactor_only", qi),)
        zm = (ZModeEntry(ZeroMode("a0", i), None, Fraction(0), -m),)
        return ExpOperator(ONE, creat, (), ZERO_LABEL, zm, (), f"Psi{i},{s}")
    raise ValueError(f"kind must be phi or psi, got {kind!r}")


def build_K(i: int, params: AlgebraParams, power: int = 1, k_convention: str = "q_i") -> ExpOperator:
    """K_i^power = q_i^{power * a_i(0)} (or q^{power * a_i(0)} with k_convention="q")."""
    m = k_multiplier(i, params.n, k_convention)
    zm = (ZModeEntry(ZeroMode("a0", i), None, Fraction(0), m * power),)
    return ExpOperator(ONE, zmodes=zm, name=f"K{i}^{power}")


# -- mode maps ----------------------------------------------------------------

class ModeMap:
    """Coefficients of a formal series in vars: exponent tuple -> State."""

    __slots__ = ("vars", "entries")

    def __init__(self, vars, entries=None):
        self.vars = tuple(vars)
        self.entries = {}
        for k, st in (entries or {}).items():
            if not st.is_zero():
                self.entries[tuple(Fraction(x) for x in k)] = st

    def get(self, key) -> State:
        return self.entries.get(tuple(Fraction(x) for x in key), State())

    def is_zero(self) -> bool:
        return not self.entries

    def __add__(self, other: "ModeMap") -> "ModeMap":
        self._check(other)
        out = dict(self.entries)
        for k, st in other.entries.items():
            out[k] = out[k] + st if k in out else st
        return ModeMap(self.vars, out)

    def __neg__(self):
        return ModeMap(self.vars, {k: -st for k, st in self.entries.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "ModeMap":
        return ModeMap(self.vars, {k: st.scale(c) for k, st in self.entries.items()})

    def shift(self, var: str, r) -> "ModeMap":
        """Multiply the series by var^r."""
        idx = self.vars.index(var)
        r = Fraction(r)
        out = {}
        for k, st in self.entries.items():
            k2 = list(k)
            k2[idx] += r
            out[tuple(k2)] = st
        return ModeMap(self.vars, out)

    def restrict(self, window) -> "ModeMap":
        win = normalize_window(window, self.vars)
        return ModeMap(
            self.vars,
            {k: st for k, st in self.entries.items() if all(win[v][0] <= x <= win[v][1] for v, x in zip(self.vars, k))},
        )

    def _check(self, other):
        if self.vars != other.vars:
            raise ValueError(f"ModeMap variable mismatch {self.vars} vs {other.vars}")

    def __eq__(self, other):
        if not isinstance(other, ModeMap):
            return NotImplemented
        return self.vars == other.vars and self.entries == other.entries

    def sorted_items(self):
        return sorted(self.entries.items())

    def to_json(self) -> list:
        return [
            {"exponents": {v: str(x) for v, x in zip(self.vars, k)}, "state": st.to_json()}
            for k, st in self.sorted_items()
        ]

    def __repr__(self):
        return f"ModeMap(vars={self.vars}, {len(self.entries)} entries)"


def normalize_window(window, vars) -> dict:
    """window: (lo, hi) for all variables, or {var: (lo, hi)}; bounds multiples of 1/4."""
    out = {}
    for v in vars:
        w = window.get(v) if isinstance(window, dict) else window
        if w is None:
            raise ValueError(f"no window given for variable {v!r}")
        lo, hi = Fraction(w[0]), Fraction(w[1])
        _q4(lo)
        _q4(hi)
        if lo > hi:
            raise ValueError(f"empty window {lo}..{hi} for {v!r}")
        out[v] = (lo, hi)
    return out


# -- the Wick engine -------------------------------------------------------------

def _exp_series(c, K: int):
    """Coefficients S_0..S_K of exp(sum_k c(k) y^k)."""
    cs = [None] + [c(k) for k in range(1, K + 1)]
    S = [ONE]
    for m in range(1, K + 1):
        acc = ZERO
        for k in range(1, m + 1):
            if cs[k] and S[m - k]:
                acc = acc + cs[k] * S[m - k] * k
        S.append(acc / m if acc else ZERO)
    return S


@lru_cache(maxsize=None)
def _pair_series(pairs: tuple, n: int, K: int) -> tuple:
    return tuple(_exp_series(lambda k: contraction_coeff(pairs, k, n), K))


def _creation_table(templates, nvars: int, vidx: dict, n: int, D: int):
    """exp(sum creation) up to oscillator degree D.

    Returns list of (delta vector, oscillator tuple, degree, Scalar).
    """
    gens = {}
    for t in templates:
        for k in range(1, D + 1):
            key = (t.family, t.node, t.dir, k)
            poly = gens.setdefault(key, {})
            c = t.coeff(k, n)
            i = vidx[t.var]
            poly[i] = poly[i] + c if i in poly else c
    table = [((0,) * nvars, (), 0, ONE)]
    for (fam, node, dr, k), poly in sorted(gens.items()):
        poly = {i: c for i, c in poly.items() if c}
        if not poly:
            continue
        g = OscGen(fam, node, dr, -k)
        # powers of the polynomial C_g = sum_i c_i x_i^k
        powers = [{(0,) * nvars: ONE}]
        m = 1
        while m * k <= D:
            prev = powers[-1]
            nxt = {}
            for dv, c in prev.items():
                for i, ci in poly.items():
                    dv2 = list(dv)
                    dv2[i] += k
                    dv2 = tuple(dv2)
                    val = c * ci
                    nxt[dv2] = nxt[dv2] + val if dv2 in nxt else val
            powers.append({dv: c for dv, c in nxt.items() if c})
            m += 1
        new = []
        for dv, osc, deg, c in table:
            for m in range(len(powers)):
                if deg + m * k > D:
                    break
                if m == 0:
                    new.append((dv, osc, deg, c))
                    continue
                fact = Fraction(1, _factorial(m))
                for dv2, c2 in powers[m].items():
                    new.append(
                        (tuple(a + b for a, b in zip(dv, dv2)), osc + (g,) * m, deg + m * k, c * c2 * fact)
                    )
        table = new
    return table


@lru_cache(maxsize=None)
def _factorial(m: int) -> int:
    return 1 if m <= 1 else m * _factorial(m - 1)


def _annihilate(templates, dist: dict, vidx: dict, nvars: int, n: int) -> dict:
    """exp(sum annihilation) on dist {(delta, monomial): Scalar}; deltas are negative."""
    if not templates:
        return dist
    by_mode = {}
    for t in templates:
        by_mode.setdefault(t.family, []).append(t)
    maxdeg = max((m.degree for _, m in dist), default=0)
    result = dict(dist)
    term = dist
    m = 1
    while term and m <= maxdeg:
        nxt = {}
        for (dv, mono), c in term.items():
            if not mono.oscillators:
                continue
            modes = sorted({-g.mode for g in mono.oscillators})
            for t in templates:
                for k in modes:
                    g = t.osc(k)
                    st = act_annihilation(g, State._trusted({mono: ONE}), n)
                    if st.is_zero():
                        continue
                    coef = t.coeff(k, n) * c / m
                    dv2 = list(dv)
                    dv2[vidx[t.var]] -= k
                    dv2 = tuple(dv2)
                    for mono2, c2 in st.terms.items():
                        key = (dv2, mono2)
                        val = coef * c2
                        nxt[key] = nxt[key] + val if key in nxt else val
        term = {k: c for k, c in nxt.items() if c}
        for k, c in term.items():
            result[k] = result[k] + c if k in result else c
        m += 1
    return {k: c for k, c in result.items() if c}


def _pair_bounds(pairs: list, nvars: int, L: list, H: list, D: int, deg: int):
    """Upper bounds on each contraction power k_p (p = (u, v): term (x_v/x_u)^k)."""
    kmax = [INF] * len(pairs)
    changed = True
    while changed:
        changed = False
        for p, (u, v) in enumerate(pairs):
            # from var v: sum_in k - sum_out k <= H_v + deg
            out_v = sum(kmax[q] for q, (a, _) in enumerate(pairs) if a == v)
            b1 = H[v] + deg + out_v
            # from var u: sum_out k - sum_in k <= D - L_u
            in_u = sum(kmax[q] for q, (_, b) in enumerate(pairs) if b == u)
            b2 = D - L[u] + in_u
            b = min(b1, b2)
            if b < kmax[p]:
                kmax[p] = b
                changed = True
    if any(k == INF for k in kmax):
        raise ValueError("contraction powers are unbounded for this window (cyclic variable order)")
    return [int(k) for k in kmax]


def _term_on_label(term: Term, label_dist: dict, label: LatticeLabel, vars: tuple, vidx: dict,
                   lo4: list, hi4: list, D: int, n: int, out: dict):
    factors = term.factors
    nvars = len(vars)
    # fixed exponent offsets (quarter units) and scalar prefactor
    base = [0] * nvars
    qexp = Fraction(0)
    pre = term.coeff
    for v, e in term.varpowers:
        base[vidx[v]] += _q4(e)
    for F in factors:
        pre = pre * F.pre
        for v, e in F.monom:
            base[vidx[v]] += _q4(e)
        for z in F.zmodes:
            lam = zero_mode_eigenvalue(z.mode, label, n)
            if lam:
                if z.var is not None and z.zmult:
                    base[vidx[z.var]] += _q4(z.zmult * lam)
                qexp += z.qmult * lam
    pair_list = []
    for a, A in enumerate(factors):
        for B in factors[a + 1 :]:
            ve, qe = exchange_factor(A, B, n)
            qexp += qe
            for v, e in ve.items():
                base[vidx[v]] += _q4(e)
            cps = contraction_pairs(A, B, n)
            grouped = {}
            for ta, tb in cps:
                if ta.var == tb.var:
                    raise ValueError(f"{A.name} and {B.name} contract on the shared variable {ta.var!r}")
                grouped.setdefault((vidx[ta.var], vidx[tb.var]), []).append((ta, tb))
            for uv, ps in sorted(grouped.items()):
                pair_list.append((uv, tuple(ps)))
    pre = pre * q_power(qexp)
    # integer step ranges: final exponent = base + 4 * delta
    L, H = [], []
    for i in range(nvars):
        lo = lo4[i] - base[i]
        hi = hi4[i] - base[i]
        # only residues congruent to base mod 4 are reachable
        L.append(-((-lo) // 4))
        H.append(hi // 4)
        if L[i] > H[i]:
            return
    deg = max((m.degree for m in label_dist), default=0)
    # contraction series, merged by variable pair
    merged = {}
    for uv, ps in pair_list:
        merged.setdefault(uv, []).extend(ps)
    pairs = sorted(merged)
    kmax = _pair_bounds(pairs, nvars, L, H, D, deg) if pairs else []
    if any(k < 0 for k in kmax):
        return
    P = {(0,) * nvars: pre}
    for idx, uv in enumerate(pairs):
        series = _pair_series(tuple(merged[uv]), n, kmax[idx])
        u, v = uv
        nxt = {}
        for dv, c in P.items():
            for k, sk in enumerate(series):
                if not sk:
                    continue
                dv2 = list(dv)
                dv2[u] -= k
                dv2[v] += k
                dv2 = tuple(dv2)
                val = c * sk
                nxt[dv2] = nxt[dv2] + val if dv2 in nxt else val
        P = {k: c for k, c in nxt.items() if c}
    # prune P to reachable targets: delta_total = dP + cre - ann
    P = {dv: c for dv, c in P.items() if all(L[i] - D <= dv[i] <= H[i] + deg for i in range(nvars))}
    if not P:
        return
    ann = [t for F in factors for t in F.ann]
    cre = [t for F in factors for t in F.creat]
    shift = label
    for F in factors:
        shift = shift + F.shift
    dist0 = {((0,) * nvars, m): c for m, c in label_dist.items()}
    annd = _annihilate(ann, dist0, vidx, nvars, n)
    # combine P with annihilated state, then creation
    table = _creation_table(cre, nvars, vidx, n, D) if cre else [((0,) * nvars, (), 0, ONE)]
    for (dva, mono), ca in annd.items():
        budget = D - mono.degree
        if budget < 0:
            continue
        for dvp, cp in P.items():
            tot = [dva[i] + dvp[i] for i in range(nvars)]
            if any(tot[i] > H[i] or tot[i] + budget < L[i] for i in range(nvars)):
                continue
            cc = ca * cp
            for dvc, osc, cdeg, c3 in table:
                if cdeg > budget:
                    continue
                ok = True
                key_e = []
                for i in range(nvars):
                    x = tot[i] + dvc[i]
                    if x < L[i] or x > H[i]:
                        ok = False
                        break
                    key_e.append(base[i] + 4 * x)
                if not ok:
                    continue
                newmono = FockMonomial(tuple(sorted(mono.oscillators + osc)), shift) if osc else FockMonomial(mono.oscillators, shift)
                key = (tuple(key_e), newmono)
                val = cc * c3
                out[key] = out[key] + val if key in out else val


def _group_by_label(st: State) -> dict:
    groups = {}
    for m, c in st.terms.items():
        groups.setdefault(m.label, {})[m] = c
    return groups


def _finish(out: dict, vars: tuple) -> ModeMap:
    entries = {}
    for (e4, mono), c in out.items():
        if not c:
            continue
        entries.setdefault(e4, {})[mono] = c
    mm = {}
    for e4, terms in entries.items():
        st = State(terms)
        if not st.is_zero():
            mm[tuple(Fraction(x, 4) for x in e4)] = st
    return ModeMap(vars, mm)


def apply_modes(expr, st: State, window, D: int, n: int, method: str = "wick", vars=None,
                cutoff: int | None = None) -> ModeMap:
    """Coefficients of expr applied to st, inside window, projected to Fock degree <= D."""
    if isinstance(expr, ExpOperator):
        expr = OperatorExpression.single(expr)
    if D < 0:
        raise ValueError("truncation degree must be >= 0")
    vars = tuple(vars) if vars is not None else expr.vars
    win = normalize_window(window, vars)
    vidx = {v: i for i, v in enumerate(vars)}
    lo4 = [_q4(win[v][0]) for v in vars]
    hi4 = [_q4(win[v][1]) for v in vars]
    if method == "wick":
        out = {}
        groups = _group_by_label(st)
        for term in expr.terms:
            for label, dist in groups.items():
                _term_on_label(term, dist, label, vars, vidx, lo4, hi4, D, n, out)
        return _finish(out, vars)
    if method == "sequential":
        return _apply_sequential(expr, st, vars, vidx, lo4, hi4, D, n, cutoff)
    raise ValueError(f"unknown method {method!r}")


# -- the sequential oracle ---------------------------------------------------------

def _apply_block_seq(F: ExpOperator, dist: dict, vidx: dict, nvars: int, n: int, cutoff: int,
                     hi4: list, owned: set) -> dict:
    """One block acting on {(e4 vector, monomial): Scalar}.

    For variables owned by this block alone, creation is cut exactly where the
    exponent leaves the window; other variables use the fixed cutoff.
    """
    out = {}
    for (e4, mono), c in dist.items():
        lab = mono.label
        e = list(e4)
        qexp = Fraction(0)
        for z in F.zmodes:
            lam = zero_mode_eigenvalue(z.mode, lab, n)
            if lam:
                if z.var is not None and z.zmult:
                    e[vidx[z.var]] += _q4(z.zmult * lam)
                qexp += z.qmult * lam
        for v, x in F.monom:
            e[vidx[v]] += _q4(x)
        coef = c * F.pre * q_power(qexp)
        newmono = FockMonomial(mono.oscillators, lab + F.shift)
        key = (tuple(e), newmono)
        out[key] = out[key] + coef if key in out else coef
    annd = _annihilate_q4(F.ann, out, vidx, n)
    if not F.creat:
        return annd
    cvars = {vidx[t.var] for t in F.creat}
    bounds = {}
    for (e4, mono) in annd:
        for i in cvars:
            b = (hi4[i] - e4[i]) // 4 if i in owned else cutoff
            bounds[i] = max(bounds.get(i, -1), b)
    top = max(bounds.values(), default=-1)
    if top < 0:
        return {}
    table = _creation_table(F.creat, nvars, vidx, n, top)
    res = {}
    for (e4, mono), c in annd.items():
        lim = {i: ((hi4[i] - e4[i]) // 4 if i in owned else cutoff) for i in cvars}
        for dvc, osc, cdeg, c3 in table:
            if any(dvc[i] > lim[i] for i in cvars):
                continue
            e = tuple(e4[i] + 4 * dvc[i] for i in range(nvars))
            m2 = FockMonomial(tuple(sorted(mono.oscillators + osc)), mono.label) if osc else mono
            key = (e, m2)
            val = c * c3
            res[key] = res[key] + val if key in res else val
    return {k: v for k, v in res.items() if v}


def _annihilate_q4(templates, dist, vidx, n):
    if not templates:
        return dist
    nvars = len(next(iter(dist))[0]) if dist else 0
    result = {}
    for (e4, mono), c in dist.items():
        part = _annihilate(templates, {((0,) * nvars, mono): c}, vidx, nvars, n)
        for (dv, m2), c2 in part.items():
            key = (tuple(e4[i] + 4 * dv[i] for i in range(nvars)), m2)
            result[key] = result[key] + c2 if key in result else c2
    return {k: v for k, v in result.items() if v}


def _apply_sequential(expr, st, vars, vidx, lo4, hi4, D, n, cutoff):
    nvars = len(vars)
    if cutoff is None:
        span = max((hi4[i] - lo4[i]) // 4 for i in range(nvars)) if nvars else 0
        cutoff = D + span + st.degree + 6
    out = {}
    for term in expr.terms:
        base = [0] * nvars
        for v, e in term.varpowers:
            base[vidx[v]] += _q4(e)
        dist = {(tuple(base), m): c * term.coeff for m, c in st.terms.items()}
        count = {}
        for F in term.factors:
            for v in F.vars:
                count[vidx[v]] = count.get(vidx[v], 0) + 1
        owned = {i for i, c in count.items() if c == 1}
        for F in reversed(term.factors):
            dist = _apply_block_seq(F, dist, vidx, nvars, n, cutoff, hi4, owned)
        for (e4, mono), c in dist.items():
            if mono.degree > D:
                continue
            if all(lo4[i] <= e4[i] <= hi4[i] for i in range(nvars)):
                key = (e4, mono)
                out[key] = out[key] + c if key in out else c
    return _finish(out, vars)
