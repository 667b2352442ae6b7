"""Boltzmann-type random generation for composite species up to symmetry.

A :class:`GibbsModel` packages an outer structure (SET or SEQ, or an
explicit truncated cycle index) over an inner weighted species, together
with the cached counting series the samplers and limit laws need:

* the powered inner series family ``i -> G^{nu^i}``,
* the composite series and the remainder-species series,
* the estimated radius of convergence ``rho`` of the inner series.

Sampling follows the symmetry-first recipe: draw a cycle type of the outer
structure with argument values ``G^{nu^i}(y^i)``, then for each cycle of
length ``l`` draw one inner object under the ``nu^l`` weighting from the
Boltzmann law at ``y^l`` and attach ``l`` identical copies.  The induced
law on composite orbits is the Boltzmann law of the composite series at
``y``; conditioning on total size gives the weight-proportional law.

Size distributions are truncated at the model truncation and renormalized;
the neglected mass is recorded on the model (``size_mass_defect``).  All
closed-form expectations computed here use the same truncated values, so
sampler-vs-formula comparisons are exact identities up to Monte Carlo
noise.
"""

from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Tuple

from .cycleindex import CycleIndexPoly, CycleType, z_seq, z_set
from .engine import SeriesEngine
from .errors import (
    EmptySize,
    PreconditionError,
    RejectionBudgetExceeded,
    TailNotControlled,
    ZeroMass,
)
from .sampler import ExactSampler
from .series import RadiusEstimate, TruncatedSeries, evaluate, radius_estimate
from .species import (
    Compose,
    Enumerator,
    Node,
    Ref,
    STAR_OBJ,
    SpeciesSpec,
    object_size,
    sized_species,
    spec as make_spec,
)

PLACEHOLDER = ("placeholder",)

_LOG_EPS = 1e-18


@dataclass(frozen=True)
class SymmetryDraw:
    """Outer symmetry plus one inner attachment per cycle.

    ``attachments`` holds (cycle_length, inner_size, inner_object) triples,
    one per cycle; the ``cycle_length`` identical copies of the object are
    implied, never materialized.  ``inner_object`` is None for size-only
    draws.
    """

    cycle_type: CycleType
    attachments: Tuple[Tuple[int, int, object], ...]

    @property
    def size(self) -> int:
        return sum(l * s for l, s, _ in self.attachments)

    @property
    def fixpoints(self) -> int:
        return sum(1 for l, _, _ in self.attachments if l == 1)

    @property
    def non_fixpoint_size(self) -> int:
        return sum(l * s for l, s, _ in self.attachments if l > 1)

    def to_object(self, outer: str):
        """The induced composite orbit (requires materialized objects)."""
        copies = []
        for l, _, obj in self.attachments:
            if obj is None:
                raise PreconditionError("size-only draw has no objects")
            copies.extend([obj] * l)
        if outer == "SET":
            return ("set", tuple(sorted(copies)))
        return ("seq", tuple(copies))


@dataclass(frozen=True)
class FragmentRecord:
    """Remainder of a composite object after deleting a maximal component."""

    remainder: object
    remainder_size: int
    component_count: int
    largest_size: int


@dataclass
class SizeLaw:
    """Truncated Boltzmann size distribution P(n) ~ g_n y^n."""

    sizes: List[int]
    cumulative: List[float]
    mass_defect: float

    def sample(self, rng: random.Random) -> int:
        return self.sizes[bisect.bisect_right(self.cumulative, rng.random())]

    def prob(self, n: int) -> float:
        try:
            i = self.sizes.index(n)
        except ValueError:
            return 0.0
        return self.cumulative[i] - (self.cumulative[i - 1] if i else 0.0)


def boltzmann_size_distribution(
    series: TruncatedSeries, y: float, window: int | None = None
) -> SizeLaw:
    """Discrete law P(size = n) proportional to g_n y^n, over n up to the
    truncation, with the neglected tail mass reported (estimated via the
    fitted tail model when the series is not polynomial)."""
    if y < 0:
        raise PreconditionError("Boltzmann parameter must be >= 0")
    ev = evaluate(series, y, window=window)
    if ev.value <= 0:
        raise ZeroMass("series evaluates to zero mass")
    sizes, weights = [], []
    for n in series.nonzero_indices:
        w = float(series[n]) * y**n if n else float(series[n])
        if w > 0:
            sizes.append(n)
            weights.append(w)
    if not sizes:
        raise ZeroMass("no positive-weight sizes at this parameter")
    total = math.fsum(weights)
    cum, acc = [], 0.0
    for w in weights:
        acc += w
        cum.append(acc / total)
    cum[-1] = 1.0
    return SizeLaw(sizes, cum, ev.tail / ev.value)


def _poisson(rng: random.Random, lam: float) -> int:
    """Poisson by inversion; adequate for the small means used here."""
    if lam <= 0:
        return 0
    u = rng.random()
    p = math.exp(-lam)
    k, acc = 0, p
    while u >= acc:
        k += 1
        p *= lam / k
        acc += p
        if k > 10_000:
            raise TailNotControlled("Poisson inversion failed to terminate")
    return k


def sample_set_symmetry(
    inner_values: Callable[[int], float], rng: random.Random, tail: float = 1e-12
) -> CycleType:
    """Cycle type of a SET symmetry: the number of i-cycles is
    Poisson(y_i / i), independent over i, with y_i = inner_values(i).

    The cut index I is chosen so the neglected intensity sum is below
    ``tail``; the i >= 2 cycles are drawn from the aggregated Poisson and
    then assigned lengths, which induces the same independent law.
    """
    lams = _intensity_table(inner_values, tail)
    counts: Dict[int, int] = {}
    m1 = _poisson(rng, lams[0][1] if lams and lams[0][0] == 1 else 0.0)
    if m1:
        counts[1] = m1
    rest = [(i, lam) for i, lam in lams if i > 1]
    total = math.fsum(lam for _, lam in rest)
    k = _poisson(rng, total)
    if k:
        cum, acc = [], 0.0
        for _, lam in rest:
            acc += lam
            cum.append(acc / total)
        for _ in range(k):
            i = rest[bisect.bisect_right(cum, rng.random())][0]
            counts[i] = counts.get(i, 0) + 1
    return tuple(sorted(counts.items()))


def _intensity_table(
    inner_values: Callable[[int], float], tail: float
) -> List[Tuple[int, float]]:
    lams = []
    i = 1
    prev = math.inf
    while True:
        lam = inner_values(i) / i
        if lam < 0 or not math.isfinite(lam):
            raise TailNotControlled(f"invalid intensity at cycle length {i}")
        lams.append((i, lam))
        if i >= 3 and lam < tail and lam <= prev:
            break
        if i > 500:
            raise TailNotControlled(
                "cycle-length intensities do not decay below the tail target"
            )
        prev = lam
        i += 1
    return [(i, lam) for i, lam in lams if lam > 0]


def sample_general_symmetry(
    zf: CycleIndexPoly,
    inner_values: Callable[[int], float],
    rng: random.Random,
) -> CycleType:
    """Cycle type drawn with probability proportional to
    coeff(lambda) * prod_i y_i^{m_i} over the stored cycle-index terms."""
    entries, cum = _general_symmetry_table(zf, inner_values)
    return entries[bisect.bisect_right(cum, rng.random())]


def _general_symmetry_table(zf: CycleIndexPoly, inner_values):
    entries, weights = [], []
    for ct, coeff in zf.terms.items():
        w = float(coeff)
        for i, m in ct:
            w *= inner_values(i) ** m
        if w > 0:
            entries.append(ct)
            weights.append(w)
    if not entries:
        raise ZeroMass("cycle index has no positive-mass terms here")
    total = math.fsum(weights)
    cum, acc = [], 0.0
    for w in weights:
        acc += w
        cum.append(acc / total)
    cum[-1] = 1.0
    return entries, cum


class GibbsModel:
    """Composite model F over G with cached series and samplers."""

    def __init__(
        self,
        composite: SpeciesSpec,
        truncation: int = 200,
        outer_cycle_index: CycleIndexPoly | None = None,
    ):
        root = composite.root
        seen = set()
        while isinstance(root, Ref) and root.name not in seen:
            seen.add(root.name)
            root = composite.resolve(root.name)
        if not isinstance(root, Compose):
            raise PreconditionError(
                "model root must be a COMPOSE(SET|SEQ, inner) species"
            )
        self.spec = composite
        self.outer = root.outer
        self.inner_node: Node = root.inner
        self.inner_spec = composite.with_root(root.inner)
        self.truncation = truncation
        self.engine = SeriesEngine(composite)
        self.outer_cycle_index = outer_cycle_index
        self._inner_ogf: Dict[int, TruncatedSeries] = {}
        self._composite_ogf: TruncatedSeries | None = None
        self._rho: RadiusEstimate | None = None
        self._sampler: ExactSampler | None = None
        self._inner_sampler: ExactSampler | None = None
        self._size_laws: Dict[tuple, SizeLaw] = {}
        self._value_cache: Dict[tuple, float] = {}
        self._enum: Enumerator | None = None

    # -- constructors

    @classmethod
    def from_species(cls, composite: SpeciesSpec, truncation: int = 200) -> "GibbsModel":
        return cls(composite, truncation)

    @classmethod
    def from_series(
        cls, inner_coeffs, outer: str = "SET", truncation: int | None = None
    ) -> "GibbsModel":
        """Model whose inner class is given only by its counting sequence
        (one orbit per size, weight = coefficient)."""
        coeffs = [Fraction(c) for c in inner_coeffs]
        inner = sized_species(coeffs).root
        n = truncation if truncation is not None else max(200, len(coeffs))
        return cls(make_spec(Compose(outer, inner)), n)

    # -- cached series

    def inner_ogf(self, power: int = 1) -> TruncatedSeries:
        s = self._inner_ogf.get(power)
        if s is None:
            s = self._inner_ogf[power] = self.engine.ogf(
                self.truncation, node=self.inner_node, power=power
            )
        return s

    @property
    def composite_ogf(self) -> TruncatedSeries:
        if self._composite_ogf is None:
            s = self.engine.ogf(self.truncation)
            if s.is_polynomial_within():
                raise PreconditionError("composite series must not be polynomial")
            self._composite_ogf = s
        return self._composite_ogf

    @property
    def remainder_ogf(self) -> TruncatedSeries:
        """Series of the remainder species: the outer-derived structure
        composed with the inner class.  SET' = SET gives the composite
        series back; SEQ' = SEQ * SEQ gives its square."""
        if self.outer == "SET":
            return self.composite_ogf
        return self.composite_ogf * self.composite_ogf

    @property
    def rho(self) -> RadiusEstimate:
        if self._rho is None:
            self._rho = radius_estimate(self.inner_ogf(1))
        return self._rho

    @property
    def span(self) -> int:
        return self.inner_ogf(1).lattice_span()

    def cycle_index(self, degree: int = 40) -> CycleIndexPoly:
        if self.outer_cycle_index is not None:
            return self.outer_cycle_index
        return z_set(degree) if self.outer == "SET" else z_seq(degree)

    def exact_sampler(self) -> ExactSampler:
        if self._sampler is None:
            self._sampler = ExactSampler(self.spec, self.engine)
        return self._sampler

    def inner_sampler(self) -> ExactSampler:
        if self._inner_sampler is None:
            self._inner_sampler = ExactSampler(self.inner_spec, self.engine)
        return self._inner_sampler

    def enumerator(self) -> Enumerator:
        if self._enum is None:
            self._enum = Enumerator(self.spec, guard=max(14, 16))
        return self._enum

    # -- partial evaluations (consistent with the truncated samplers)

    def inner_value(self, power: int, x: float) -> float:
        """Partial sum of the powered inner series at x, truncated at the
        model truncation, with geometric early exit."""
        key = (power, x)
        v = self._value_cache.get(key)
        if v is not None:
            return v
        total, low = 0.0, 0
        for n in range(1, self.truncation + 1):
            c = self.engine.coeff(self.inner_node, power, n)
            if not c:
                continue
            t = float(c) * x**n
            total += t
            if t < _LOG_EPS * (1.0 + total):
                low += 1
                if low >= 3:
                    break
            else:
                low = 0
        self._value_cache[key] = total
        return total

    def _size_law(self, power: int, y: float) -> SizeLaw:
        key = (power, y)
        law = self._size_laws.get(key)
        if law is None:
            series = self.inner_ogf(power)
            sizes, weights = [], []
            for n in series.nonzero_indices:
                if n == 0:
                    continue
                w = float(series[n]) * y**n
                if w > 0:
                    sizes.append(n)
                    weights.append(w)
            if not sizes:
                raise ZeroMass("inner series has no mass at this parameter")
            total = math.fsum(weights)
            cum, acc = [], 0.0
            for w in weights:
                acc += w
                cum.append(acc / total)
            cum[-1] = 1.0
            law = self._size_laws[key] = SizeLaw(sizes, cum, 0.0)
        return law

    # -- samplers

    def sample_symmetry_sizes(self, y: float, rng: random.Random) -> List[Tuple[int, int]]:
        """(cycle_length, inner_size) per cycle, objects not materialized."""
        if self.outer == "SET":
            ct = sample_set_symmetry(lambda i: self.inner_value(i, y**i), rng)
        elif self.outer_cycle_index is not None:
            ct = sample_general_symmetry(
                self.outer_cycle_index, lambda i: self.inner_value(i, y**i), rng
            )
        else:
            g = self.inner_value(1, y)
            if g >= 1.0:
                raise TailNotControlled(
                    "SEQ outer needs inner series value < 1 at the parameter"
                )
            k = 0
            while rng.random() < g:
                k += 1
            ct = ((1, k),) if k else ()
        out = []
        for l, m in ct:
            law = self._size_law(l, y**l)
            for _ in range(m):
                out.append((l, law.sample(rng)))
        return out

    def sample_composite(self, y: float, rng: random.Random) -> SymmetryDraw:
        """One Boltzmann composite draw at parameter y: symmetry, then one
        weight-proportional inner object per cycle (under the powered
        weighting), shared by the cycle's atoms."""
        pairs = self.sample_symmetry_sizes(y, rng)
        sampler = self.inner_sampler()
        att = tuple(
            (l, s, sampler.sample(s, rng, power=l)) for l, s in pairs
        )
        counts: Dict[int, int] = {}
        for l, _ in pairs:
            counts[l] = counts.get(l, 0) + 1
        return SymmetryDraw(tuple(sorted(counts.items())), att)

    def tuned_parameter(self, n: int) -> float:
        """Rejection tuning y* = rho (1 - 1/n)^{1/d}, clipped to (0, rho]."""
        d = self.span
        rho = self.rho.rho
        y = rho * (1.0 - 1.0 / max(n, 2)) ** (1.0 / d)
        return min(max(y, 1e-12), rho)

    def sample_S_n(
        self,
        n: int,
        rng: random.Random,
        method: str = "exact_recursive",
        budget: int = 2_000_000,
        y: float | None = None,
    ):
        """Size-n composite orbit, weight-proportional."""
        if self.engine.coeff(self.spec.root, 1, n) == 0:
            raise EmptySize(f"no composite objects of size {n}")
        if method == "exact_recursive":
            return self.exact_sampler().sample(n, rng)
        if method != "rejection":
            raise PreconditionError(f"unknown sampling method {method!r}")
        ystar = self.tuned_parameter(n) if y is None else y
        sampler = self.inner_sampler()
        for _ in range(budget):
            pairs = self.sample_symmetry_sizes(ystar, rng)
            if sum(l * s for l, s in pairs) != n:
                continue
            copies = []
            for l, s in pairs:
                copies.extend([sampler.sample(s, rng, power=l)] * l)
            if self.outer == "SET":
                return ("set", tuple(sorted(copies)))
            return ("seq", tuple(copies))
        raise RejectionBudgetExceeded(
            f"no size-{n} draw within {budget} attempts at y*={ystar:.6g}"
        )

    # -- remainders

    def extract_remainder(self, s, rng: random.Random) -> FragmentRecord:
        """Delete one uniformly chosen maximal component; the remainder is
        the derived-outer composite orbit (for SET simply the remaining
        multiset, for SEQ the sequence with a * at the hole)."""
        kind, children = s[0], s[1]
        if not children:
            raise PreconditionError("composite object has no components")
        sizes = [object_size(c) for c in children]
        biggest = max(sizes)
        candidates = [i for i, sz in enumerate(sizes) if sz == biggest]
        i = candidates[rng.randrange(len(candidates))]
        if kind == "set":
            rest = children[:i] + children[i + 1 :]
            remainder = ("set", tuple(sorted(rest)))
        else:
            remainder = ("seq", children[:i] + (STAR_OBJ,) + children[i + 1 :])
        return FragmentRecord(
            remainder=remainder,
            remainder_size=sum(sizes) - biggest,
            component_count=len(children),
            largest_size=biggest,
        )

    def limit_remainder_distribution(self, cap: int) -> "LimitLaw":
        """Boltzmann limit law of the remainder at the estimated radius:
        P(R = o) = weight(o) rho^{|o|} / D with D the remainder-species
        series at rho; exact orbit probabilities up to size ``cap`` plus
        the residual tail mass, with a sensitivity from the rho spread."""
        if cap > self.enumerator().guard:
            self._enum = Enumerator(self.spec, guard=cap)
        rho = self.rho.rho
        probs, lo, hi = self._limit_probs(cap, rho)
        spread = self.rho.spread
        sens = 0.0
        for shifted in (rho - spread, rho + spread):
            p2, _, _ = self._limit_probs(cap, shifted)
            sens = max(
                sens,
                max(abs(p2[k] - probs[k]) for k in probs) if probs else 0.0,
            )
        tail = 1.0 - math.fsum(probs.values())
        return LimitLaw(probs, tail, cap, sens, rho)

    def _limit_probs(self, cap: int, rho: float):
        denom_series = self.remainder_ogf
        ev = evaluate(denom_series, rho)
        D = ev.value
        if D <= 0:
            raise ZeroMass("remainder series evaluates to zero")
        probs: Dict[object, float] = {}
        for key, weight, size in self._remainder_orbits(cap):
            probs[key] = float(weight) * rho**size / D
        return probs, ev.partial, ev.tail

    def _remainder_orbits(self, cap: int):
        """(canonical remainder, weight, size) for all remainder orbits of
        size <= cap."""
        enum = self.enumerator()
        if self.outer == "SET":
            for n in range(cap + 1):
                for o, w in enum.enumerate(self.spec.root, n):
                    yield o, w, n
        else:
            # a derived sequence is a pair of sequences; encode as one
            # sequence with a * at the junction
            for n in range(cap + 1):
                for o, w in enum.enumerate(self.spec.root, n):
                    left = o[1]
                    for cut in range(len(left) + 1):
                        yield ("seq", left[:cut] + (STAR_OBJ,) + left[cut:]), w, n

    def limit_component_count_law(self, cap: int) -> Tuple[Dict[int, float], float]:
        """Exact law of the component count of the limit remainder.

        For a SET outer the count is sum_i i * m_i with the cycle
        multiplicities m_i independent Poisson(G^(i)(rho^i) / i), a compound
        Poisson whose probabilities follow the recurrence
        k p_k = sum_i i lam_i p_{k-i}.  For a SEQ outer the remainder is a
        pair of sequences, so the count is the sum of two independent
        geometric lengths with parameter G(rho).

        Returns probabilities for counts 0..cap plus the residual tail mass.
        """
        rho = self.rho.rho
        if self.outer == "SET":
            lams = dict(
                _intensity_table(lambda i: self.inner_value(i, rho**i), 1e-15)
            )
            # the i = 1 intensity converges slowly (it is the inner series
            # at its radius); the fitted tail model sharpens it
            lams[1] = evaluate(self.inner_ogf(1), rho).value
            total = math.fsum(lams.values())
            p = [math.exp(-total)]
            for k in range(1, cap + 1):
                p.append(
                    math.fsum(
                        i * lam * p[k - i] for i, lam in lams.items() if i <= k
                    )
                    / k
                )
        else:
            q = self.inner_value(1, rho)
            if q >= 1:
                raise ZeroMass("sequence model has no finite limit remainder")
            p = [(k + 1) * (1.0 - q) ** 2 * q**k for k in range(cap + 1)]
        probs = {k: pk for k, pk in enumerate(p)}
        return probs, max(0.0, 1.0 - math.fsum(p))

    def sample_hat_S_n(
        self, n: int, rng: random.Random, law: "LimitLaw" | None = None
    ):
        """Coupled approximation: draw the limit remainder R; if |R| < n,
        attach a weight-proportional inner object of size n - |R| at the
        hole, else return the placeholder."""
        if law is None or law.cap < n - 1:
            law = self.limit_remainder_distribution(n - 1)
        key = law.sample(rng)
        if key is LimitLaw.TAIL:
            return PLACEHOLDER
        size = object_size(key)
        if size >= n:
            return PLACEHOLDER
        giant = self.inner_sampler().sample(n - size, rng)
        if self.outer == "SET":
            return ("set", tuple(sorted(key[1] + (giant,))))
        i = key[1].index(STAR_OBJ)
        return ("seq", key[1][:i] + (giant,) + key[1][i + 1 :])

    # -- cycle statistics

    def cycle_statistics_pgf_check(
        self, y_point: float, w_point: float, samples: int, rng: random.Random
    ) -> "PgfReport":
        """Monte Carlo check of the joint transform E[y^f w^h] at the
        radius, where f counts outer fixpoints and h is the total size
        attached to longer cycles, against the cycle-index evaluation with
        the same truncated argument values."""
        rho = self.rho.rho
        total = 0.0
        sq = 0.0
        for _ in range(samples):
            f, h = 0, 0
            for l, s in self.sample_symmetry_sizes(rho, rng):
                if l == 1:
                    f += 1
                else:
                    h += l * s
            v = y_point**f * w_point**h
            total += v
            sq += v * v
        mc = total / samples
        var = max(sq / samples - mc * mc, 0.0)
        se = math.sqrt(var / samples)
        zf = self.cycle_index()

        def args_num(i: int) -> float:
            if i == 1:
                return y_point * self.inner_value(1, rho)
            return self.inner_value(i, (w_point * rho) ** i)

        num, num_resid = zf.evaluate_at(args_num)
        den, den_resid = zf.evaluate_at(lambda i: self.inner_value(i, rho**i))
        exact = num / den
        return PgfReport(mc, se, exact, max(num_resid, den_resid), samples)


class LimitLaw:
    """Exact limit remainder law up to a size cap, plus tail mass."""

    TAIL = ("tail",)

    def __init__(self, probs, tail, cap, sensitivity, rho):
        self.probs: Dict[object, float] = probs
        self.tail = tail
        self.cap = cap
        self.sensitivity = sensitivity
        self.rho = rho
        self._keys = list(probs)
        cum, acc = [], 0.0
        for k in self._keys:
            acc += probs[k]
            cum.append(acc)
        self._cum = cum
        self.total = acc + tail

    def sample(self, rng: random.Random):
        u = rng.random() * self.total
        i = bisect.bisect_right(self._cum, u)
        return self._keys[i] if i < len(self._keys) else LimitLaw.TAIL

    def pushforward(self, fn) -> Dict[object, float]:
        """Exact law of fn(R) on the enumerated part (tail stays a bucket)."""
        out: Dict[object, float] = {}
        for k, p in self.probs.items():
            fk = fn(k)
            out[fk] = out.get(fk, 0.0) + p
        return out


@dataclass(frozen=True)
class PgfReport:
    estimate: float
    standard_error: float
    exact: float
    truncation_residual: float
    samples: int

    @property
    def sigmas(self) -> float:
        if self.standard_error == 0:
            return 0.0 if self.estimate == self.exact else math.inf
        return abs(self.estimate - self.exact) / self.standard_error
