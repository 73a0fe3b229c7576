"""Finite orthomodular lattices: validated representation and order algorithms.

Elements of a lattice are the integers 0..n-1.  The order relation is kept
as one bitmask per element (bit j of up_mask(i) set iff i <= j), which makes
the axiom checks and the join/meet table construction cheap enough for a few
thousand elements.
"""

from __future__ import annotations

import itertools
from array import array
from dataclasses import dataclass, field

from .errors import (
    CapExceeded,
    InternalInvariantViolation,
    MalformedInput,
    ValidationFailed,
)


def _bits(mask):
    """Yield the set bit positions of mask, lowest first."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class OmlData:
    """Raw candidate data for a finite OML, prior to validation.

    up[i] is the bitmask of elements j with i <= j (the relation must already
    be reflexive and transitively closed; validation reports it otherwise).
    """

    n: int
    up: tuple
    comp: tuple
    bottom: int
    top: int

    @classmethod
    def from_pairs(cls, n, pairs, comp, bottom, top, close=False):
        """Build candidate data from a list of (i, j) order pairs.

        With close=True the reflexive-transitive closure of the pairs is
        taken; otherwise the pairs are used as given (plus reflexivity).
        """
        up = [1 << i for i in range(n)]
        for i, j in pairs:
            if not (0 <= i < n and 0 <= j < n):
                raise MalformedInput("order pair (%d, %d) out of range" % (i, j))
            up[i] |= 1 << j
        if close:
            changed = True
            while changed:
                changed = False
                for i in range(n):
                    acc = up[i]
                    for j in _bits(acc):
                        acc |= up[j]
                    if acc != up[i]:
                        up[i] = acc
                        changed = True
        return cls(n, tuple(up), tuple(comp), bottom, top)

    @classmethod
    def from_matrix(cls, leq, comp, bottom, top):
        """Build candidate data from a square boolean matrix leq[i][j]."""
        n = len(leq)
        up = []
        for i, row in enumerate(leq):
            if len(row) != n:
                raise MalformedInput("leq row %d has length %d, expected %d" % (i, len(row), n))
            m = 0
            for j, v in enumerate(row):
                if v:
                    m |= 1 << j
            up.append(m)
        return cls(n, tuple(up), tuple(comp), bottom, top)


@dataclass(frozen=True)
class Violation:
    """One failed axiom with a witness tuple of element indices."""

    axiom: str
    witness: tuple

    def __str__(self):
        return "%s witness %s" % (self.axiom, ",".join(str(w) for w in self.witness))


@dataclass
class ValidationReport:
    """Outcome of validate_oml: ok, or the list of violated axioms."""

    ok: bool
    violations: list = field(default_factory=list)
    oml: "FiniteOml | None" = None

    def __str__(self):
        if self.ok:
            return "ok"
        return "; ".join(str(v) for v in self.violations)


class FiniteOml:
    """A validated finite orthomodular lattice.

    Instances are immutable after construction: the full order relation and
    the join/meet tables are computed once during validation, so all queries
    are table lookups and the value is safe to share across threads.
    """

    __slots__ = ("n", "bottom", "top", "_up", "_dn", "_comp", "_join", "_meet",
                 "_atom_mask", "_full")

    def __init__(self, n, up, dn, comp, bottom, top, join_table, meet_table, atom_mask):
        self.n = n
        self.bottom = bottom
        self.top = top
        self._up = up
        self._dn = dn
        self._comp = comp
        self._join = join_table
        self._meet = meet_table
        self._atom_mask = atom_mask
        self._full = (1 << n) - 1

    @classmethod
    def from_data(cls, data, full_report=False):
        """Validate candidate data and return the lattice, or raise ValidationFailed."""
        report = validate_oml(data, full_report=full_report)
        if not report.ok:
            raise ValidationFailed(str(report), report=report)
        return report.oml

    # -- order and operations ------------------------------------------------

    def leq(self, i, j):
        return (self._up[i] >> j) & 1 == 1

    def join(self, i, j):
        return self._join[i][j]

    def meet(self, i, j):
        return self._meet[i][j]

    def comp(self, i):
        return self._comp[i]

    def orthogonal(self, i, j):
        """True iff i <= j', i.e. the pair is summable by a state."""
        return self.leq(i, self._comp[j])

    def up_mask(self, i):
        """Bitmask of {j : i <= j}."""
        return self._up[i]

    def down_mask(self, i):
        """Bitmask of {j : j <= i}."""
        return self._dn[i]

    def is_atom(self, i):
        return (self._atom_mask >> i) & 1 == 1

    def atoms(self):
        return list(_bits(self._atom_mask))

    def atoms_below(self, i):
        return list(_bits(self._atom_mask & self._dn[i]))

    def elements(self):
        return range(self.n)

    def covers(self, i):
        """Elements covering i (upper neighbours in the Hasse diagram)."""
        out = []
        dominated = 0
        rest = self._up[i] & ~(1 << i)
        for j in sorted(_bits(rest), key=lambda j: (self._dn[j].bit_count(), j)):
            if (dominated >> j) & 1:
                continue
            out.append(j)
            dominated |= self._up[j] & ~(1 << j)
        return sorted(out)

    def __eq__(self, other):
        if not isinstance(other, FiniteOml):
            return NotImplemented
        return (self.n == other.n and self._up == other._up
                and self._comp == other._comp
                and self.bottom == other.bottom and self.top == other.top)

    def __hash__(self):
        return hash((self.n, self._up, self._comp, self.bottom, self.top))

    def __repr__(self):
        return "FiniteOml(n=%d)" % self.n


def validate_oml(data, full_report=False):
    """Check every OML axiom on candidate data.

    Returns a ValidationReport; report.oml holds the FiniteOml when ok.
    By default the first violation stops the scan; with full_report=True all
    violations are collected.  Raises MalformedInput for dimension or range
    defects that make the axioms unaskable.
    """
    n = data.n
    if n < 1:
        raise MalformedInput("element count must be positive, got %d" % n)
    if len(data.up) != n:
        raise MalformedInput("order relation has %d rows, expected %d" % (len(data.up), n))
    if len(data.comp) != n:
        raise MalformedInput("complement map has length %d, expected %d" % (len(data.comp), n))
    if sorted(data.comp) != list(range(n)):
        raise MalformedInput("complement map is not a permutation of 0..%d" % (n - 1))
    if not (0 <= data.bottom < n and 0 <= data.top < n):
        raise MalformedInput("bottom/top index out of range")
    full = (1 << n) - 1
    for i, m in enumerate(data.up):
        if m & ~full:
            raise MalformedInput("order row %d references elements >= %d" % (i, n))

    report = ValidationReport(ok=True)

    def fail(axiom, witness):
        report.ok = False
        report.violations.append(Violation(axiom, tuple(witness)))
        return not full_report     # True means stop now

    up = list(data.up)
    comp = list(data.comp)
    bottom, top = data.bottom, data.top

    if bottom == top:
        fail("nondegenerate", (bottom,))
        return report

    # reflexivity
    for i in range(n):
        if not (up[i] >> i) & 1:
            if fail("reflexive", (i, i)):
                return report

    dn = [0] * n
    for i in range(n):
        m = up[i]
        for j in _bits(m):
            dn[j] |= 1 << i

    # antisymmetry: up[i] & dn[i] must be exactly {i}
    for i in range(n):
        m = up[i] & dn[i] & ~(1 << i)
        if m:
            if fail("antisymmetric", (i, next(_bits(m)))):
                return report

    # transitivity: j in up[i] implies up[j] subseteq up[i]
    for i in range(n):
        for j in _bits(up[i]):
            extra = up[j] & ~up[i]
            if extra:
                if fail("transitive", (i, j, next(_bits(extra)))):
                    return report

    # distinguished bounds
    if up[bottom] != full:
        if fail("bottom-least", (bottom, next(_bits(full & ~up[bottom])))):
            return report
    if dn[top] != full:
        if fail("top-greatest", (next(_bits(full & ~dn[top])), top)):
            return report

    # lattice property + join/meet tables.  Elements are ranked by down-set
    # size (a linear extension), so the least element of any up-set
    # intersection is its lowest-ranked member, found as a lowest set bit in
    # rank space.
    order = sorted(range(n), key=lambda i: (dn[i].bit_count(), i))
    rank = [0] * n
    for r, i in enumerate(order):
        rank[i] = r
    up_r = [0] * n        # indexed by rank, bits in rank space
    dn_r = [0] * n
    for i in range(n):
        m = 0
        for j in _bits(up[i]):
            m |= 1 << rank[j]
        up_r[rank[i]] = m
        m = 0
        for j in _bits(dn[i]):
            m |= 1 << rank[j]
        dn_r[rank[i]] = m

    code = "H" if n <= 0xFFFF else "I"
    # build the tables in rank space first
    jrows = [array(code, [0] * n) for _ in range(n)]
    mrows = [array(code, [0] * n) for _ in range(n)]
    lattice_ok = True
    for a in range(n):
        ua, da = up_r[a], dn_r[a]
        ja, ma = jrows[a], mrows[a]
        for b in range(a, n):
            cand = ua & up_r[b]
            if cand == 0:
                lattice_ok = False
                if fail("join-exists", (order[a], order[b])):
                    return report
                u = 0
            else:
                low = cand & -cand
                u = low.bit_length() - 1
                if cand & ~up_r[u]:
                    lattice_ok = False
                    if fail("join-exists", (order[a], order[b])):
                        return report
            ja[b] = u
            jrows[b][a] = u
            cand = da & dn_r[b]
            if cand == 0:
                lattice_ok = False
                if fail("meet-exists", (order[a], order[b])):
                    return report
                v = 0
            else:
                v = cand.bit_length() - 1
                if cand & ~dn_r[v]:
                    lattice_ok = False
                    if fail("meet-exists", (order[a], order[b])):
                        return report
            ma[b] = v
            mrows[b][a] = v
    if not lattice_ok:
        return report

    # translate tables back to original element indices
    join_t = [None] * n
    meet_t = [None] * n
    for i in range(n):
        ri = rank[i]
        jr, mr = jrows[ri], mrows[ri]
        join_t[i] = array(code, [order[jr[rank[j]]] for j in range(n)])
        meet_t[i] = array(code, [order[mr[rank[j]]] for j in range(n)])
    del jrows, mrows

    # complement axioms
    for i in range(n):
        if comp[comp[i]] != i:
            if fail("comp-involution", (i, comp[i])):
                return report
    for i in range(n):
        ci = comp[i]
        for j in _bits(up[i]):
            if not (up[comp[j]] >> ci) & 1:
                if fail("comp-order-reversing", (i, j)):
                    return report
    for i in range(n):
        if join_t[i][comp[i]] != top or meet_t[i][comp[i]] != bottom:
            if fail("complement-law", (i, comp[i])):
                return report

    # orthomodular law: i <= j implies j = i v (j ^ i')
    for i in range(n):
        ci = comp[i]
        ji = join_t[i]
        mrow = meet_t[ci]
        for j in _bits(up[i]):
            if ji[mrow[j]] != j:
                if fail("orthomodular", (i, j)):
                    return report

    if not report.ok:
        return report

    atom_mask = 0
    for i in range(n):
        if dn[i].bit_count() == 2:
            atom_mask |= 1 << i

    report.oml = FiniteOml(n, tuple(up), tuple(dn), tuple(comp), bottom, top,
                           join_t, meet_t, atom_mask)
    return report


@dataclass(frozen=True)
class SubOml:
    """A subset of a lattice closed under comp, join, meet and holding 0, 1."""

    parent: FiniteOml
    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(sorted(self.members)))

    def member_mask(self):
        m = 0
        for i in self.members:
            m |= 1 << i
        return m

    def verify(self):
        """Re-check closure by direct enumeration; raises on failure."""
        L = self.parent
        mask = self.member_mask()
        if not (mask >> L.bottom) & 1 or not (mask >> L.top) & 1:
            raise InternalInvariantViolation("sub-OML misses a bound")
        for i in self.members:
            if not (mask >> L.comp(i)) & 1:
                raise InternalInvariantViolation("sub-OML not closed under comp at %d" % i)
            for j in self.members:
                if not (mask >> L.join(i, j)) & 1:
                    raise InternalInvariantViolation("sub-OML not closed under join at (%d, %d)" % (i, j))
                if not (mask >> L.meet(i, j)) & 1:
                    raise InternalInvariantViolation("sub-OML not closed under meet at (%d, %d)" % (i, j))
        return True

    def as_oml(self):
        """Materialize the sub-OML as a FiniteOml plus the index map.

        Returns (K, elems) where elems[k] is the parent element of K's k.
        """
        L = self.parent
        elems = list(self.members)
        pos = {e: k for k, e in enumerate(elems)}
        m = len(elems)
        up = []
        for e in elems:
            mask = 0
            for k, f in enumerate(elems):
                if L.leq(e, f):
                    mask |= 1 << k
            up.append(mask)
        comp = tuple(pos[L.comp(e)] for e in elems)
        data = OmlData(m, tuple(up), comp, pos[L.bottom], pos[L.top])
        return FiniteOml.from_data(data), elems

    def __len__(self):
        return len(self.members)

    def __contains__(self, i):
        return i in set(self.members)


@dataclass(frozen=True)
class OmlHom:
    """A structure-preserving map between two finite OMLs."""

    source: FiniteOml
    target: FiniteOml
    map: tuple

    def __post_init__(self):
        object.__setattr__(self, "map", tuple(self.map))
        if len(self.map) != self.source.n:
            raise MalformedInput("hom map has length %d, expected %d"
                                 % (len(self.map), self.source.n))
        for v in self.map:
            if not 0 <= v < self.target.n:
                raise MalformedInput("hom map value %d out of range" % v)

    def verify(self):
        """Check comp/join/top preservation, plus the derived meet/bottom laws."""
        S, T, f = self.source, self.target, self.map
        if f[S.top] != T.top:
            raise InternalInvariantViolation("hom does not send top to top")
        for i in range(S.n):
            if f[S.comp(i)] != T.comp(f[i]):
                raise InternalInvariantViolation("hom breaks comp at %d" % i)
            for j in range(S.n):
                if f[S.join(i, j)] != T.join(f[i], f[j]):
                    raise InternalInvariantViolation("hom breaks join at (%d, %d)" % (i, j))
        # derived: meets and bottom follow from comp + join, asserted anyway
        if f[S.bottom] != T.bottom:
            raise InternalInvariantViolation("hom does not send bottom to bottom")
        for i in range(S.n):
            for j in range(S.n):
                if f[S.meet(i, j)] != T.meet(f[i], f[j]):
                    raise InternalInvariantViolation("hom breaks meet at (%d, %d)" % (i, j))
        return True

    def is_bijective(self):
        return len(set(self.map)) == self.source.n == self.target.n

    def __call__(self, i):
        return self.map[i]


def compatible(L, a, b):
    """True iff a = (a ^ b) v (a ^ b'), the simultaneous-measurability relation."""
    return L.join(L.meet(a, b), L.meet(a, L.comp(b))) == a


def _compat_masks(L):
    n = L.n
    out = []
    for a in range(n):
        m = 0
        for b in range(n):
            if compatible(L, a, b):
                m |= 1 << b
        out.append(m)
    return out


def is_boolean_set(L, members):
    """Explicitly verify that a closed member set is a Boolean subalgebra.

    The set is mapped onto the power set of its own atoms and every join,
    meet and complement is compared against the corresponding set operation;
    distributivity follows from that representation.  Returns False rather
    than raising.
    """
    mask = 0
    for i in members:
        mask |= 1 << i
    members = sorted(members)
    if L.bottom not in members or L.top not in members:
        return False
    # atoms of the subalgebra: members covering bottom inside the set
    local_atoms = []
    for x in members:
        below = L.down_mask(x) & mask
        if x != L.bottom and below == (1 << x) | (1 << L.bottom):
            local_atoms.append(x)
    k = len(local_atoms)
    if len(members) != 1 << k:
        return False
    atom_pos = {a: p for p, a in enumerate(local_atoms)}
    sig = {}
    for x in members:
        s = 0
        for a, p in atom_pos.items():
            if L.leq(a, x):
                s |= 1 << p
        sig[x] = s
    if len(set(sig.values())) != len(members):
        return False
    full = (1 << k) - 1
    for x in members:
        if sig[L.comp(x)] != full ^ sig[x]:
            return False
        for y in members:
            if sig[L.join(x, y)] != sig[x] | sig[y]:
                return False
            if sig[L.meet(x, y)] != sig[x] & sig[y]:
                return False
    return True


def centre(L):
    """The set of elements compatible with every element of L.

    Returns a SubOml; asserts that the result is a Boolean subalgebra.
    """
    members = []
    for a in range(L.n):
        if all(compatible(L, a, b) for b in range(L.n)):
            members.append(a)
    sub = SubOml(L, tuple(members))
    sub.verify()
    if not is_boolean_set(L, members):
        raise InternalInvariantViolation("centre failed the Boolean check")
    return sub


def blocks(L):
    """All maximal Boolean subalgebras, via maximal pairwise-compatible sets.

    Each maximal compatible set is explicitly verified to be Boolean instead
    of relying on the corresponding structure theorem; a failure raises
    InternalInvariantViolation.
    """
    compat = _compat_masks(L)
    n = L.n
    full = (1 << n) - 1
    cliques = []

    def expand(r, p, x):
        if p == 0 and x == 0:
            cliques.append(r)
            return
        pivot_pool = p | x
        pivot = next(_bits(pivot_pool))
        best = pivot
        best_deg = (compat[pivot] & p).bit_count()
        for u in _bits(pivot_pool):
            d = (compat[u] & p).bit_count()
            if d > best_deg:
                best, best_deg = u, d
        for v in _bits(p & ~compat[best]):
            vb = 1 << v
            expand(r | vb, p & compat[v], x & compat[v])
            p &= ~vb
            x |= vb

    expand(0, full, 0)
    result = []
    covered = 0
    for cl in sorted(cliques):
        members = tuple(sorted(_bits(cl)))
        if not is_boolean_set(L, members):
            raise InternalInvariantViolation(
                "maximal compatible set %s is not Boolean" % (members,))
        sub = SubOml(L, members)
        sub.verify()
        covered |= cl
        result.append(sub)
    if covered != full:
        raise InternalInvariantViolation("blocks do not cover the lattice")
    result.sort(key=lambda s: s.members)
    return result


def sub_oml_generated(L, seed):
    """Least sub-OML containing the seed elements, by fixpoint closure."""
    mask = (1 << L.bottom) | (1 << L.top)
    for i in seed:
        if not 0 <= i < L.n:
            raise MalformedInput("seed element %d out of range" % i)
        mask |= 1 << i
        mask |= 1 << L.comp(i)
    changed = True
    while changed:
        changed = False
        members = list(_bits(mask))
        for a in members:
            mask |= 1 << L.comp(a)
            for b in members:
                mask |= 1 << L.join(a, b)
                mask |= 1 << L.meet(a, b)
        changed = mask.bit_count() != len(members)
    sub = SubOml(L, tuple(_bits(mask)))
    sub.verify()
    return sub


def min_generators(L, cap=64):
    """Minimum generating set: returns (m, witness, cf) with cf = |L| - m.

    Exhaustive search in increasing subset size; candidates are restricted to
    one element per complement pair, which loses no generality because x and
    x' generate the same sub-OML.
    """
    if L.n > cap:
        raise CapExceeded("min_generators needs n <= %d, got %d" % (cap, L.n))
    full = (1 << L.n) - 1
    if sub_oml_generated(L, ()).member_mask() == full:
        return 0, (), L.n
    candidates = [i for i in range(L.n)
                  if i not in (L.bottom, L.top) and i <= L.comp(i)]
    for m in range(1, len(candidates) + 1):
        for combo in itertools.combinations(candidates, m):
            if sub_oml_generated(L, combo).member_mask() == full:
                return m, combo, L.n - m
    raise InternalInvariantViolation("lattice not generated by its own elements")


def _refine_classes(L):
    """Iteratively refined invariant label per element, for isomorphism pruning."""
    n = L.n
    lab = [(L.down_mask(i).bit_count(), L.up_mask(i).bit_count(),
            L.is_atom(i), L.is_atom(L.comp(i)),
            i == L.bottom, i == L.top) for i in range(n)]
    covers = [tuple(L.covers(i)) for i in range(n)]
    for _ in range(n):
        key = [(lab[i], lab[L.comp(i)],
                tuple(sorted(lab[j] for j in covers[i]))) for i in range(n)]
        ids = {}
        new = []
        for k in key:
            if k not in ids:
                ids[k] = len(ids)
            new.append(ids[k])
        if new == lab:
            break
        lab = new
    return lab


def is_isomorphic(L1, L2, cap=200):
    """Search for a bijective hom L1 -> L2; returns it or None.

    Cardinality mismatch short-circuits to None.  Above the element cap the
    search is refused with CapExceeded.
    """
    if L1.n != L2.n:
        return None
    if L1.n > cap:
        raise CapExceeded("isomorphism search needs n <= %d, got %d" % (cap, L1.n))
    lab1 = _refine_classes(L1)
    lab2 = _refine_classes(L2)
    if sorted(lab1) != sorted(lab2):
        return None
    n = L1.n
    by_class = {}
    for j, c in enumerate(lab2):
        by_class.setdefault(c, []).append(j)
    order = sorted(range(n), key=lambda i: (len(by_class[lab1[i]]), i))
    fwd = [-1] * n
    used = [False] * n

    def rollback(undo):
        for x, _ in reversed(undo):
            used[fwd[x]] = False
            fwd[x] = -1

    def assign(i, c):
        """Try f(i) = c plus every forced consequence; returns undo list or None."""
        undo = []
        stack = [(i, c)]
        while stack:
            a, b = stack.pop()
            if fwd[a] != -1:
                if fwd[a] != b:
                    rollback(undo)
                    return None
                continue
            if used[b] or lab1[a] != lab2[b]:
                rollback(undo)
                return None
            # consistency with everything already assigned
            ok = True
            for j in range(n):
                fj = fwd[j]
                if fj == -1:
                    continue
                if L1.leq(a, j) != L2.leq(b, fj) or L1.leq(j, a) != L2.leq(fj, b):
                    ok = False
                    break
            if not ok:
                rollback(undo)
                return None
            fwd[a] = b
            used[b] = True
            undo.append((a, b))
            stack.append((L1.comp(a), L2.comp(b)))
            # joins/meets with assigned elements force further images
            for j in range(n):
                if fwd[j] == -1 or j == a:
                    continue
                ja, jb = L1.join(a, j), L2.join(b, fwd[j])
                if fwd[ja] != -1 and fwd[ja] != jb:
                    rollback(undo)
                    return None
                if fwd[ja] == -1:
                    stack.append((ja, jb))
                ma, mb = L1.meet(a, j), L2.meet(b, fwd[j])
                if fwd[ma] != -1 and fwd[ma] != mb:
                    rollback(undo)
                    return None
                if fwd[ma] == -1:
                    stack.append((ma, mb))
        return undo

    def search(k):
        while k < n and fwd[order[k]] != -1:
            k += 1
        if k == n:
            return True
        i = order[k]
        for c in by_class[lab1[i]]:
            if used[c]:
                continue
            undo = assign(i, c)
            if undo is None:
                continue
            if search(k + 1):
                return True
            rollback(undo)
        return False

    undo0 = assign(L1.bottom, L2.bottom)
    if undo0 is None:
        return None
    undo1 = assign(L1.top, L2.top)
    if undo1 is None:
        return None
    if not search(0):
        return None
    hom = OmlHom(L1, L2, tuple(fwd))
    hom.verify()
    if not hom.is_bijective():
        raise InternalInvariantViolation("isomorphism search returned a non-bijection")
    return hom


def hom_image(h):
    """Image of a hom as a SubOml of its target, closure re-verified."""
    members = tuple(sorted(set(h.map)))
    sub = SubOml(h.target, members)
    sub.verify()
    return sub
