"""Piecewise-quadratic functions: pieces, envelopes, and stack updates.

Optimum functions of cell borders are piecewise quadratic.  They are
represented as ordered stacks of ``QuadraticPiece`` covering an interval
without gaps; adjacent pieces agree at shared breakpoints up to a small
continuity slack.  The propagation loop builds per-slab lower envelopes
of quadratic candidates and folds them into the running stack with a
suffix update, which is valid because improvements always arrive as a
suffix in the processed order.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import EmptyEnvelope, OrderViolation, OutOfDomain

# Relative continuity slack at shared breakpoints (times value scale).
EPS_CONTINUITY = 1e-7
# Pieces shorter than this fraction of the domain get merged into neighbors.
MIN_PIECE_FRACTION = 1e-12
# Tie tolerance when comparing candidate values (times value scale).
EPS_TIE = 1e-11


@dataclass(frozen=True, slots=True)
class QuadraticPiece:
    """One quadratic c2*t^2 + c1*t + c0 on the closed interval [lo, hi]."""

    lo: float
    hi: float
    c2: float
    c1: float
    c0: float
    tag: str = ""

    def value(self, t: float) -> float:
        return (self.c2 * t + self.c1) * t + self.c0

    def derivative(self, t: float) -> float:
        return 2.0 * self.c2 * t + self.c1

    def with_interval(self, lo: float, hi: float) -> "QuadraticPiece":
        return QuadraticPiece(lo, hi, self.c2, self.c1, self.c0, self.tag)

    def coeffs(self) -> tuple[float, float, float]:
        return (self.c2, self.c1, self.c0)


def substitute_linear(q: Sequence[float], a: float, b: float) -> tuple[float, float, float]:
    """Coefficients of t -> q(a*t + b) for quadratic coefficients q = (c2, c1, c0)."""
    c2, c1, c0 = q
    return (c2 * a * a, 2.0 * c2 * a * b + c1 * a, (c2 * b + c1) * b + c0)


def _min_on_interval(c2: float, c1: float, c0: float, lo: float, hi: float) -> float:
    vals = [(c2 * lo + c1) * lo + c0, (c2 * hi + c1) * hi + c0]
    if c2 > 0.0:
        v = -c1 / (2.0 * c2)
        if lo < v < hi:
            vals.append((c2 * v + c1) * v + c0)
    return min(vals)


def _max_on_interval(c2: float, c1: float, c0: float, lo: float, hi: float) -> float:
    vals = [(c2 * lo + c1) * lo + c0, (c2 * hi + c1) * hi + c0]
    if c2 < 0.0:
        v = -c1 / (2.0 * c2)
        if lo < v < hi:
            vals.append((c2 * v + c1) * v + c0)
    return max(vals)


def _difference_roots(qa, qb, lo: float, hi: float) -> list[float]:
    """Roots of qa - qb strictly inside (lo, hi), ascending.

    Near-tangency (discriminant below 1e-12 of its natural scale) counts
    as no crossing; the sign-aware quadratic formula avoids cancellation.
    """
    d2 = qa[0] - qb[0]
    d1 = qa[1] - qb[1]
    d0 = qa[2] - qb[2]
    span = max(abs(lo), abs(hi), 1.0)
    mag = abs(d2) * span * span + abs(d1) * span + abs(d0)
    if mag == 0.0:
        return []
    if abs(d2) * span * span <= 1e-14 * mag:
        if abs(d1) * span <= 1e-14 * mag:
            return []
        r = -d0 / d1
        return [r] if lo < r < hi else []
    disc = d1 * d1 - 4.0 * d2 * d0
    scale_sq = max(d1 * d1, abs(4.0 * d2 * d0))
    if disc <= 1e-12 * scale_sq:
        return []
    sq = math.sqrt(disc)
    if d1 >= 0.0:
        q = -0.5 * (d1 + sq)
    else:
        q = -0.5 * (d1 - sq)
    roots = []
    if q != 0.0:
        roots.append(d0 / q)
    roots.append(q / d2)
    roots = sorted(r for r in roots if lo < r < hi)
    out: list[float] = []
    for r in roots:
        if not out or r - out[-1] > 1e-14 * span:
            out.append(r)
    return out


class PiecewiseQuadratic:
    """Ordered, gap-free stack of quadratic pieces over one interval."""

    __slots__ = ("pieces",)

    def __init__(self, pieces: Iterable[QuadraticPiece]):
        self.pieces: tuple[QuadraticPiece, ...] = tuple(pieces)

    def __len__(self) -> int:
        return len(self.pieces)

    def __repr__(self) -> str:
        if not self.pieces:
            return "PiecewiseQuadratic(empty)"
        return f"PiecewiseQuadratic([{self.lo}, {self.hi}], {len(self.pieces)} pieces)"

    @property
    def lo(self) -> float:
        return self.pieces[0].lo

    @property
    def hi(self) -> float:
        return self.pieces[-1].hi

    def breakpoints(self) -> list[float]:
        if not self.pieces:
            return []
        return [self.pieces[0].lo] + [p.hi for p in self.pieces]

    def evaluate(self, t: float) -> float:
        """Value at t, taking the left piece at shared breakpoints."""
        if not self.pieces:
            raise OutOfDomain("empty function")
        tol = 1e-9 * max(abs(self.lo), abs(self.hi), 1.0)
        if t < self.lo - tol or t > self.hi + tol:
            raise OutOfDomain(f"t={t} outside [{self.lo}, {self.hi}]")
        for p in self.pieces:
            if t <= p.hi:
                return p.value(t)
        return self.pieces[-1].value(t)

    def derivative_at(self, t: float) -> float:
        if not self.pieces:
            raise OutOfDomain("empty function")
        for p in self.pieces:
            if t <= p.hi:
                return p.derivative(t)
        return self.pieces[-1].derivative(t)

    def value_scale(self) -> float:
        s = 1.0
        for p in self.pieces:
            s = max(s, abs(p.value(p.lo)), abs(p.value(p.hi)))
        return s

    def restrict(self, lo: float, hi: float) -> "PiecewiseQuadratic":
        """Restriction to [lo, hi] (must be inside the domain up to tolerance)."""
        tol = 1e-9 * max(abs(self.lo), abs(self.hi), 1.0)
        if lo < self.lo - tol or hi > self.hi + tol or lo > hi + tol:
            raise OutOfDomain(f"[{lo}, {hi}] not inside [{self.lo}, {self.hi}]")
        lo = max(lo, self.lo)
        hi = min(hi, self.hi)
        out = []
        for p in self.pieces:
            a = max(p.lo, lo)
            b = min(p.hi, hi)
            if b - a > 0.0 or (not out and b >= a):
                out.append(p.with_interval(a, b))
        if not out:  # degenerate single point
            p = self.pieces[-1]
            out = [p.with_interval(lo, hi)]
        return PiecewiseQuadratic(out)

    def continuity_defect(self) -> float:
        """Largest value jump across interior breakpoints."""
        worst = 0.0
        for a, b in zip(self.pieces, self.pieces[1:]):
            worst = max(worst, abs(a.value(a.hi) - b.value(b.lo)))
        return worst

    def is_continuous(self, scale: float | None = None) -> bool:
        s = self.value_scale() if scale is None else scale
        return self.continuity_defect() <= EPS_CONTINUITY * max(s, 1.0)

    def to_csv(self) -> str:
        """Debug dump, one piece per row: lo, hi, c2, c1, c0, tag."""
        buf = io.StringIO()
        buf.write("lo,hi,c2,c1,c0,tag\n")
        for p in self.pieces:
            buf.write(f"{p.lo!r},{p.hi!r},{p.c2!r},{p.c1!r},{p.c0!r},{p.tag}\n")
        return buf.getvalue()


def evaluate(f: PiecewiseQuadratic, t: float) -> float:
    return f.evaluate(t)


def coalesce(pieces: Sequence[QuadraticPiece]) -> list[QuadraticPiece]:
    """Drop sliver pieces and merge runs with identical coefficients."""
    pieces = [p for p in pieces if p.hi >= p.lo]
    if not pieces:
        return []
    domain = pieces[-1].hi - pieces[0].lo
    min_len = MIN_PIECE_FRACTION * max(domain, 1e-300)
    kept: list[QuadraticPiece] = []
    for p in pieces:
        if p.hi - p.lo < min_len and kept:
            kept[-1] = kept[-1].with_interval(kept[-1].lo, p.hi)
            continue
        if p.hi - p.lo < min_len and not kept:
            continue
        kept.append(p)
    if not kept:  # whole domain is one sliver; keep it as a single piece
        return [pieces[0].with_interval(pieces[0].lo, pieces[-1].hi)]
    merged: list[QuadraticPiece] = [kept[0]]
    for p in kept[1:]:
        q = merged[-1]
        if p.c2 == q.c2 and p.c1 == q.c1 and p.c0 == q.c0:
            merged[-1] = q.with_interval(q.lo, p.hi)
        else:
            # snap abutting endpoints so the stack stays gap-free
            merged.append(p.with_interval(q.hi, p.hi) if p.lo != q.hi else p)
    return merged


def _merge_piece_pair(a: QuadraticPiece, b: QuadraticPiece, lo: float, hi: float,
                      prefer_a: bool, tie_tol: float) -> list[tuple[QuadraticPiece, bool]]:
    """Envelope of two quadratics on [lo, hi] as (piece, from_a) parts."""
    cuts = [lo] + _difference_roots(a.coeffs(), b.coeffs(), lo, hi) + [hi]
    out = []
    for x0, x1 in zip(cuts, cuts[1:]):
        xm = 0.5 * (x0 + x1)
        va = a.value(xm)
        vb = b.value(xm)
        if abs(va - vb) <= tie_tol:
            take_a = prefer_a
        else:
            take_a = va < vb
        src = a if take_a else b
        out.append((src.with_interval(x0, x1), take_a))
    return out


def _envelope_common(cands: Sequence[QuadraticPiece], lo: float, hi: float,
                     tie_tol: float) -> list[QuadraticPiece]:
    """Lower envelope of quadratics sharing [lo, hi]; earlier candidates win ties."""
    env: list[QuadraticPiece] = [cands[0].with_interval(lo, hi)]
    for cand in cands[1:]:
        new_env: list[QuadraticPiece] = []
        for piece in env:
            for part, _ in _merge_piece_pair(piece, cand, piece.lo, piece.hi,
                                             prefer_a=True, tie_tol=tie_tol):
                new_env.append(part)
        env = new_env
    return coalesce(env)


def lower_envelope(candidates: Sequence[QuadraticPiece]) -> PiecewiseQuadratic:
    """Pointwise minimum of quadratic pieces over their common interval.

    Ties go to the candidate with the lowest index, which keeps the
    result deterministic when pieces coincide.
    """
    if not candidates:
        raise EmptyEnvelope("no candidates")
    lo = max(p.lo for p in candidates)
    hi = min(p.hi for p in candidates)
    tol = 1e-9 * max(abs(lo), abs(hi), 1.0)
    if lo > hi + tol:
        raise EmptyEnvelope("candidates share no interval")
    hi = max(hi, lo)
    scale = max(max(abs(p.value(lo)), abs(p.value(hi))) for p in candidates)
    tie_tol = EPS_TIE * max(scale, 1.0)
    return PiecewiseQuadratic(_envelope_common(candidates, lo, hi, tie_tol))


def envelope_over_intervals(candidates: Sequence[QuadraticPiece],
                            lo: float, hi: float) -> PiecewiseQuadratic:
    """Lower envelope of interval-restricted candidates covering [lo, hi].

    Candidates live on their own sub-intervals; between consecutive
    endpoint events the active set is fixed and a common-interval
    envelope applies.  Raises ``EmptyEnvelope`` on coverage gaps.
    """
    if not candidates:
        raise EmptyEnvelope("no candidates")
    span = max(hi - lo, 1e-300)
    snap = 1e-12 * max(abs(lo), abs(hi), span)
    events = {lo, hi}
    for c in candidates:
        if c.lo < hi and c.hi > lo:
            events.add(min(max(c.lo, lo), hi))
            events.add(min(max(c.hi, lo), hi))
    cuts = sorted(events)
    dedup = [cuts[0]]
    for x in cuts[1:]:
        if x - dedup[-1] > snap:
            dedup.append(x)
    dedup[-1] = hi
    scale = 1.0
    for c in candidates:
        scale = max(scale, abs(c.value(c.lo)), abs(c.value(c.hi)))
    tie_tol = EPS_TIE * scale
    out: list[QuadraticPiece] = []
    for x0, x1 in zip(dedup, dedup[1:]):
        xm = 0.5 * (x0 + x1)
        active = [c for c in candidates if c.lo - snap <= xm <= c.hi + snap]
        if not active:
            raise EmptyEnvelope(f"coverage gap at [{x0}, {x1}]")
        out.extend(_envelope_common(active, x0, x1, tie_tol))
    return PiecewiseQuadratic(coalesce(out))


@dataclass
class StackCounters:
    """Telemetry for stack suffix updates during one propagation run."""

    pushes: int = 0
    pops: int = 0

    def merge(self, other: "StackCounters") -> None:
        self.pushes += other.pushes
        self.pops += other.pops


def stack_suffix_update(stack: PiecewiseQuadratic | None,
                        addition: PiecewiseQuadratic,
                        counters: StackCounters | None = None) -> PiecewiseQuadratic:
    """Fold a new partial envelope into the running optimum-function stack.

    The addition must abut or overlap the top (high end) of the stack.
    Wherever it improves on the stack, the improvement region must be a
    suffix of the overlap; dominated stack pieces are popped and the
    improving pieces pushed.  A genuine non-suffix improvement pattern
    raises ``OrderViolation``.
    """
    if counters is None:
        counters = StackCounters()
    if stack is None or len(stack) == 0:
        counters.pushes += len(addition)
        return addition
    if len(addition) == 0:
        return stack
    scale = max(stack.value_scale(), addition.value_scale())
    tie_tol = EPS_TIE * scale
    viol_tol = EPS_CONTINUITY * scale
    gap_tol = 1e-9 * max(abs(stack.hi), abs(addition.lo), 1.0)

    if addition.lo > stack.hi + gap_tol:
        raise OrderViolation(
            f"addition starts at {addition.lo}, beyond stack top {stack.hi}")
    if addition.hi < stack.hi - gap_tol:
        raise OrderViolation(
            f"addition ends at {addition.hi}, below stack top {stack.hi}")
    if addition.lo >= stack.hi - gap_tol:
        # pure extension
        glued = list(stack.pieces)
        for p in addition.pieces:
            glued.append(p.with_interval(max(p.lo, stack.hi), p.hi))
        counters.pushes += len(addition)
        return PiecewiseQuadratic(coalesce(glued))

    ov_lo = max(stack.lo, addition.lo)
    ov_hi = stack.hi

    # Locate the lowest point where the addition strictly improves.
    marks = sorted({ov_lo, ov_hi}
                   | {b for b in stack.breakpoints() if ov_lo < b < ov_hi}
                   | {b for b in addition.breakpoints() if ov_lo < b < ov_hi})
    tau0 = None
    for x0, x1 in zip(marks, marks[1:]):
        xm = 0.5 * (x0 + x1)
        sp = next(p for p in stack.pieces if p.lo - gap_tol <= xm <= p.hi + gap_tol)
        ap = next(p for p in addition.pieces if p.lo - gap_tol <= xm <= p.hi + gap_tol)
        d2 = ap.c2 - sp.c2
        d1 = ap.c1 - sp.c1
        d0 = ap.c0 - sp.c0
        if _min_on_interval(d2, d1, d0, x0, x1) >= -tie_tol:
            continue
        if (d2 * x0 + d1) * x0 + d0 < -tie_tol:
            tau0 = x0
        else:
            roots = _difference_roots((d2, d1, d0), (0.0, 0.0, 0.0), x0, x1)
            tau0 = roots[0] if roots else x0
        break
    if tau0 is None:
        return stack  # no improvement anywhere

    # Suffix check: above tau0 the stack must never beat the addition by
    # more than the violation slack.
    for x0, x1 in zip(marks, marks[1:]):
        if x1 <= tau0:
            continue
        x0 = max(x0, tau0)
        xm = 0.5 * (x0 + x1)
        sp = next(p for p in stack.pieces if p.lo - gap_tol <= xm <= p.hi + gap_tol)
        ap = next(p for p in addition.pieces if p.lo - gap_tol <= xm <= p.hi + gap_tol)
        d2 = ap.c2 - sp.c2
        d1 = ap.c1 - sp.c1
        d0 = ap.c0 - sp.c0
        if _max_on_interval(d2, d1, d0, x0, x1) > viol_tol:
            raise OrderViolation(
                f"improvement region is not a suffix near t={xm}")

    kept: list[QuadraticPiece] = []
    popped = 0
    for p in stack.pieces:
        if p.hi <= tau0:
            kept.append(p)
        elif p.lo < tau0:
            kept.append(p.with_interval(p.lo, tau0))
            popped += 1
        else:
            popped += 1

    # Incumbent pieces win ties, matching the processing order's preference.
    tail = addition.restrict(max(tau0, addition.lo), addition.hi)
    stack_tail = stack.restrict(tau0, stack.hi)
    pushed_env = envelope_over_intervals(list(stack_tail.pieces) + list(tail.pieces),
                                         tau0, ov_hi)
    counters.pops += popped
    counters.pushes += len(pushed_env)
    return PiecewiseQuadratic(coalesce(kept + list(pushed_env.pieces)))
