"""Momenta, Euler-Lagrange expressions and Cartan-type equivalents.

For a Lagrangian density L of order r the conjugate momenta are produced by
the descending recursion

    P^K = (1/N(K)) dL/dy^s_K                      for |K| = r,
    P^K = (1/N(K)) dL/dy^s_K - sum_i d_i P^{K+i}  for |K| < r,

where N(K) is the multinomial weight of the canonical multi-index K. The
formal-derivative term must sit *outside* the 1/N(K) weight: moving it
inside breaks the equivalence with the alternating-sum Euler-Lagrange form
as soon as n >= 2 (exercised by the weight-placement test).

The canonical n-form equivalent carries the coefficients
f^{i,J} = N(J) P^{merge(J, i)} on om^s_J ^ om_i; it is horizontal-equivalent
to L om_0 and the 1-contact part of its exterior derivative collapses onto
om^s ^ om_0 with the Euler-Lagrange coefficient. A family of equivalents is
parametrized by free coefficient tables g whose weighted symmetrization
vanishes; the same descending recursion with g inserted produces their
coefficient tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import forms
from . import multiindex as mi
from . import numerics
from .errors import (ContactOrderError, DegreeError, InadmissibleGError,
                     InputError, VerticalityError)
from .forms import DiffForm
from .numerics import IntegrationDomain, ResidualSummary, Section
from .symcore import ChartContext, Expr, base, jet, vel


@dataclass(frozen=True)
class LagrangianProblem:
    """A Lagrangian density of order at most r on the chart."""

    ctx: ChartContext
    L: Expr

    def __post_init__(self):
        for c in self.L.coords():
            if c.kind not in ("x", "y"):
                raise InputError(f"Lagrangian may not contain {c.text()}")
            if c.kind == "y" and c.order > self.ctx.r:
                raise InputError(
                    f"Lagrangian of order {c.order} exceeds declared order {self.ctx.r}")


@dataclass
class MomentaTable:
    """Conjugate momentum expressions keyed by (sigma, K), 1 <= |K| <= r."""

    prob: LagrangianProblem
    entries: dict

    def __getitem__(self, key):
        sigma, K = key
        return self.entries[(sigma, tuple(sorted(K)))]

    def items_sorted(self):
        return sorted(self.entries.items(), key=lambda kv: (kv[0][0], len(kv[0][1]), kv[0][1]))


def momenta(prob: LagrangianProblem) -> MomentaTable:
    """Descending momentum recursion."""
    ctx = prob.ctx
    r = ctx.r
    entries = {}
    for k in range(r, 0, -1):
        for sigma in range(1, ctx.m + 1):
            for K in mi.tuples(ctx.n, k):
                e = prob.L.partial(jet(sigma, K)) * Fraction(1, mi.count(K))
                if k < r:
                    for i in range(1, ctx.n + 1):
                        e = e - entries[(sigma, mi.merge(K, i))].total_derivative(i)
                entries[(sigma, K)] = e
    return MomentaTable(prob, entries)


def euler_lagrange(prob: LagrangianProblem) -> dict:
    """Euler-Lagrange expressions dL/dy^s - sum_i d_i P^(i), order <= 2r."""
    ctx = prob.ctx
    ctx.ensure_max_order(2 * ctx.r)
    P = momenta(prob)
    out = {}
    for sigma in range(1, ctx.m + 1):
        e = prob.L.partial(jet(sigma, ()))
        for i in range(1, ctx.n + 1):
            e = e - P[(sigma, (i,))].total_derivative(i)
        out[sigma] = e
    return out


@dataclass
class GSpec:
    """Free coefficient table g^(s; j_k | j_1..j_{k-1}) for 2 <= k <= r.

    Entries of level k may depend on jets of order at most 2r - 1 - k, and
    the weighted symmetrization over the full index multiset must vanish:
    for every canonical K, sum over (J, i) with merge(J, i) = K of
    N(J) g^(s; i | J) = 0.
    """

    entries: dict = field(default_factory=dict)  # (sigma, i, J) -> Expr

    def get(self, sigma, i, J, ctx) -> Expr:
        e = self.entries.get((sigma, i, tuple(sorted(J))))
        return e if e is not None else Expr.const(ctx, 0)

    def validate(self, prob: LagrangianProblem) -> None:
        ctx = prob.ctx
        r = ctx.r
        if not self.entries:
            return
        if r == 1:
            raise InadmissibleGError(
                "no free coefficients exist for first-order problems")
        for (sigma, i, J), e in self.entries.items():
            k = len(J) + 1
            if not 2 <= k <= r:
                raise InadmissibleGError(
                    f"entry level {k} outside 2..{r} for key ({sigma},{i},{J})")
            if not 1 <= i <= ctx.n or not 1 <= sigma <= ctx.m:
                raise InadmissibleGError(f"index out of range in ({sigma},{i},{J})")
            for c in e.coords():
                if c.kind not in ("x", "y"):
                    raise InadmissibleGError(
                        f"entry ({sigma},{i},{J}) depends on {c.text()}")
            if e.max_jet_order() > 2 * r - 1 - k:
                raise InadmissibleGError(
                    f"entry ({sigma},{i},{J}) has jet order {e.max_jet_order()} "
                    f"> {2 * r - 1 - k}")
        for sigma in range(1, ctx.m + 1):
            for k in range(2, r + 1):
                for K in mi.tuples(ctx.n, k):
                    total = Expr.const(ctx, 0)
                    for J, i in mi.parent_pairs(K):
                        total = total + self.get(sigma, i, J, ctx) * mi.count(J)
                    if not total.is_zero():
                        raise InadmissibleGError(
                            f"weighted symmetrization nonzero at sigma={sigma}, K={K}: "
                            f"{total}")


@dataclass
class LepageanForm:
    """An n-form equivalent of the Lagrangian, of contact order <= 1.

    ``f`` maps (sigma, i, J) with 0 <= |J| <= r-1 to the coefficient of
    om^s_J ^ om_i; ``correction`` holds f(g) - f(0) when the form was built
    from a nonzero free table.
    """

    prob: LagrangianProblem
    f: dict
    correction: dict | None = None
    _realized: DiffForm | None = None

    @property
    def ctx(self) -> ChartContext:
        return self.prob.ctx

    def coefficient(self, sigma, i, J) -> Expr:
        e = self.f.get((sigma, i, tuple(sorted(J))))
        return e if e is not None else Expr.const(self.ctx, 0)

    def realize(self) -> DiffForm:
        """The form L om_0 + sum f^{iJ} om^s_J ^ om_i in the differential basis."""
        if self._realized is None:
            ctx = self.ctx
            rho = forms.omega_0(ctx).scaled(self.prob.L)
            for (sigma, i, J), e in self.f.items():
                if e.is_zero():
                    continue
                piece = forms.wedge(forms.omega_contact(ctx, sigma, J),
                                    forms.omega_i(ctx, i))
                rho = rho + piece.scaled(e)
            self._realized = rho
        return self._realized

    def items_sorted(self):
        return sorted(self.f.items(), key=lambda kv: (kv[0][0], len(kv[0][2]), kv[0][2], kv[0][1]))


def _coefficient_recursion(prob: LagrangianProblem, g: GSpec) -> dict:
    """Descending recursion for the contact coefficients with g inserted."""
    ctx = prob.ctx
    r = ctx.r
    f: dict = {}
    for k in range(r, 0, -1):
        level: dict = {}
        for sigma in range(1, ctx.m + 1):
            for J in mi.tuples(ctx.n, k - 1):
                NJ = mi.count(J)
                for i in range(1, ctx.n + 1):
                    K = mi.merge(J, i)
                    e = prob.L.partial(jet(sigma, K)) * Fraction(1, mi.count(K))
                    if k < r:
                        s = Expr.const(ctx, 0)
                        for l in range(1, ctx.n + 1):
                            s = s + f[(sigma, l, K)].total_derivative(l)
                        e = e - s * Fraction(1, mi.count(K))
                    if k >= 2:
                        e = e + g.get(sigma, i, J, ctx)
                    level[(sigma, i, J)] = e * NJ
        f.update(level)
    return f


def poincare_cartan(prob: LagrangianProblem) -> LepageanForm:
    """The canonical equivalent with coefficients N(J) P^{merge(J,i)}."""
    return LepageanForm(prob, _coefficient_recursion(prob, GSpec()))


def lepagean_from_g(prob: LagrangianProblem, g: GSpec) -> LepageanForm:
    """Equivalent of the family parametrized by an admissible free table."""
    g.validate(prob)
    f = _coefficient_recursion(prob, g)
    if g.entries:
        base_f = _coefficient_recursion(prob, GSpec())
        correction = {}
        for key, e in f.items():
            q = e - base_f[key]
            if not q.is_zero():
                correction[key] = q
    else:
        correction = None
    return LepageanForm(prob, f, correction)


@dataclass
class DefectReport:
    """Outcome of testing a candidate n-form for horizontal equivalence.

    ``contact_defect`` holds the nonzero coefficients of om^s_J ^ om_0 with
    |J| >= 1 in the 1-contact part of the exterior derivative (all of them
    must vanish); the |J| = 0 coefficients are the Euler-Lagrange
    expressions and are reported separately.
    """

    horizontal_mismatch: Expr
    euler_lagrange: dict
    contact_defect: dict

    @property
    def is_lepagean(self) -> bool:
        return self.horizontal_mismatch.is_zero() and not self.contact_defect


def lepagean_defect(rho: DiffForm, prob: LagrangianProblem) -> DefectReport:
    ctx = prob.ctx
    if rho.degree != ctx.n:
        raise DegreeError(f"expected an n-form, got degree {rho.degree}")
    max_support = 0
    for covs, c in rho.terms.items():
        max_support = max(max_support, c.max_jet_order(),
                          *(cov.coord.order for cov in covs if cov.coord.kind == "y"),
                          0)
    ctx.ensure_max_order(max(max_support + 2, 2 * ctx.r))
    dec = forms.contact_decompose(rho)
    if dec.contact_order() > 1:
        raise ContactOrderError(
            f"form has contact order {dec.contact_order()} > 1")
    mismatch = forms.horizontal_density(dec.horizontal) - prob.L
    p1 = forms.contact_decompose(forms.ext_d(rho)).part(1)
    dx_block = tuple(forms.d_(base(i)) for i in range(1, ctx.n + 1))
    el = {}
    defect = {}
    seen = set()
    for covs in p1.terms:
        wc = [cv for cv in covs if cv.kind == "w"]
        if len(wc) != 1:
            continue
        key = (wc[0].coord.sigma, wc[0].coord.J)
        if key in seen:
            continue
        seen.add(key)
        coeff = p1.coefficient((wc[0],) + dx_block)
        if coeff.is_zero():
            continue
        if key[1]:
            defect[key] = coeff
        else:
            el[key[0]] = coeff
    return DefectReport(mismatch, el, defect)


def extended_lagrangian(lep: LepageanForm) -> Expr:
    """First-order density on the prolonged space generating the same dynamics.

    Affine in the velocities; substituting v(s;J|i) -> y^s_{J+i} recovers L.
    """
    ctx = lep.ctx
    if not ctx.velocity_enabled:
        raise InputError("velocity coordinates are disabled in this chart")
    terms = [lep.prob.L]
    for (sigma, i, J), e in lep.f.items():
        if e.is_zero():
            continue
        gap = Expr.coord(ctx, vel(sigma, J, i)) - Expr.coord(ctx, jet(sigma, mi.merge(J, i)))
        terms.append(e * gap)
    return Expr.sum(ctx, terms)


@dataclass
class HamiltonFormTable:
    """Coefficients of the canonical-equation form on the prolonged space.

    Entry (nu, P) is the coefficient of dy^nu_P ^ om_0; a prolonged section
    annihilates the form iff every entry vanishes along it. Entries are
    affine in the velocity atoms.
    """

    lep: LepageanForm
    entries: dict
    extended: Expr

    def __getitem__(self, key):
        nu, P = key
        return self.entries[(nu, tuple(sorted(P)))]

    def items_sorted(self):
        return sorted(self.entries.items(), key=lambda kv: (kv[0][0], len(kv[0][1]), kv[0][1]))


def hamilton_form(lep: LepageanForm) -> HamiltonFormTable:
    """First-order Euler-Lagrange table of the extended density."""
    ctx = lep.ctx
    Lt = extended_lagrangian(lep)
    entries = {}
    for nu in range(1, ctx.m + 1):
        for k in range(0, 2 * ctx.r):
            for P in mi.tuples(ctx.n, k):
                e = Lt.partial(jet(nu, P))
                for q in range(1, ctx.n + 1):
                    dv = Lt.partial(vel(nu, P, q))
                    if dv.is_zero():
                        continue
                    e = e - dv.prolonged_total_derivative(q)
                entries[(nu, P)] = e
    return HamiltonFormTable(lep, entries, Lt)


def section_prolongation_binding(delta: Section) -> dict:
    """Coordinate binding for evaluation along the prolongation of a section.

    Jet coordinates bind to the section components, velocity coordinates to
    their base-direction partials.
    """
    ctx = delta.ctx
    binding = {}
    for (sigma, J), comp in delta.components.items():
        binding[jet(sigma, J)] = comp
        for p in range(1, ctx.n + 1):
            binding[vel(sigma, J, p)] = comp.partial(base(p))
    return binding


def hamilton_extremal_residual(table: HamiltonFormTable, delta: Section,
                               domain: IntegrationDomain,
                               resolution: int | None = None) -> ResidualSummary:
    """Max |entry| along the prolonged section over sample points."""
    binding = section_prolongation_binding(delta)
    exprs = {key: e for key, e in table.entries.items()}
    return numerics.residual_grid(exprs, binding, domain, resolution)


def prolong_vector_field(ctx: ChartContext, xi: dict, order: int) -> dict:
    """Components of the jet prolongation of a vertical field.

    ``xi`` maps sigma to a component in (x, y); the component at (sigma, J)
    is the iterated formal derivative d_J xi^sigma.
    """
    comps = {}
    for sigma, e in xi.items():
        if not isinstance(e, Expr):
            e = Expr.const(ctx, e)
        for c in e.coords():
            if c.kind == "x" or (c.kind == "y" and c.order == 0):
                continue
            raise VerticalityError(
                f"field component contains {c.text()}; only base and order-0 "
                "fiber coordinates are allowed")
        comps[(sigma, ())] = e
    for k in range(1, order + 1):
        for sigma in xi:
            for J in mi.tuples(ctx.n, k):
                comps[(sigma, J)] = comps[(sigma, J[:-1])].total_derivative(J[-1])
    return comps


def action_value(prob: LagrangianProblem, gamma: Section,
                 domain: IntegrationDomain, resolution: int | None = None) -> float:
    """Quadrature of the Lagrangian density along the prolonged section."""
    pro = numerics.jet_prolong_section(gamma, prob.ctx.r)
    integrand = prob.L.subs(pro.subs_map())
    return numerics.quadrature(integrand, domain, resolution)


@dataclass
class FirstVariation:
    """Both sides of the first variation identity."""

    lhs: float
    interior: float
    boundary: float

    @property
    def rhs(self) -> float:
        return self.interior + self.boundary


def first_variation_check(prob: LagrangianProblem, lep: LepageanForm, xi: dict,
                          gamma: Section, domain: IntegrationDomain,
                          eps: float = 1e-5,
                          resolution: int | None = None) -> FirstVariation:
    """Compare the variation of the action with interior + boundary terms.

    The left side is a central finite difference in the variation parameter
    along the straight path gamma + t (xi o gamma); only the generator
    enters a first variation, so the straight path gives the same derivative
    as any flow with that generator. The right side contracts the exterior
    derivative of the equivalent (interior term) and the equivalent itself
    (boundary term) with the prolonged field along the prolonged section.
    """
    ctx = prob.ctx
    ctx.ensure_max_order(2 * ctx.r)
    order = 2 * ctx.r - 1
    gamma_sub = gamma.subs_map()
    direction = {}
    for sigma, e in xi.items():
        if not isinstance(e, Expr):
            e = Expr.const(ctx, e)
        direction[sigma] = e.subs(gamma_sub)

    def flowed(t: float) -> Section:
        frac = Fraction(t).limit_denominator(10 ** 12)
        return Section(ctx, {
            (sigma, ()): gamma.component(sigma, ()) + direction[sigma] * frac
            for sigma in direction
        })

    lhs = (action_value(prob, flowed(eps), domain, resolution)
           - action_value(prob, flowed(-eps), domain, resolution)) / (2 * eps)

    rho = lep.realize()
    xi_pro = prolong_vector_field(ctx, xi, order)
    vec = {jet(sigma, J): e for (sigma, J), e in xi_pro.items()}
    gamma_pro = numerics.jet_prolong_section(gamma, order)

    inner = forms.interior_product(vec, forms.ext_d(rho))
    inner_density = forms.horizontal_density(numerics.pullback_along(inner, gamma_pro))
    interior = numerics.quadrature(inner_density, domain, resolution)

    boundary_form = numerics.pullback_along(forms.interior_product(vec, rho), gamma_pro)
    boundary = numerics.boundary_quadrature(boundary_form, domain, resolution)
    return FirstVariation(lhs, interior, boundary)
