"""Message-adversary checkers and generators over lasso-encoded graph sequences.

The checkers decide membership of an (infinite) graph sequence in the
stabilizing adversary classes used by the consensus machinery:

* ``liveness``  -- some root set R is a permanent common root from round
  ``r_gst`` on and the unique ("single") root from round ``r_sr`` on.
* ``safety(x)`` -- any root staying common for more than x consecutive
  rounds must already be that permanent, eventually-single root.
* ``estable``   -- safety(D) and liveness plus a dynamic diameter of D.
* ``alt_*``     -- the relaxed variants built around a common-root interval
  with an embedded (x+1)-round single phase plus D later re-appearances.
* ``mad(x, y)`` -- alt_safety(x) and alt_liveness with phase parameter y.
* ``vsrc``      -- a window of rounds with an identical root-component set.

"Forever" clauses are decided exactly on lassos: a per-round root predicate
that holds in every cycle graph holds forever, and every distinct finite run
pattern appears within prefix + two cycle unrollings.

Generators are construct-then-validate: they build a candidate respecting a
planted certificate, run the full checker, and retry with perturbed
randomness (bounded attempts) on rejection.  Same params + seed yields a
byte-identical lasso.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional

from .graphs import (
    CommGraph,
    LassoSequence,
    check_dynamic_diameter,
    root_components,
    single_rooted_rounds,
)


class AdversaryError(Exception):
    pass


class InfeasibleParamsError(AdversaryError):
    """The requested parameters admit no valid graph sequence."""


class GenerationRetryError(AdversaryError):
    """Construct-then-validate exhausted its retry budget."""


MAX_GENERATION_ATTEMPTS = 64


@dataclass(frozen=True)
class AdversaryCertificate:
    """Witness that a lasso satisfies an adversary class.

    ``r_gst`` is the round from which ``root`` stays a common root of the
    certified interval structure; ``r_sr >= r_gst`` is the round it becomes
    the single root.  ``reappearances`` lists the D guaranteed later
    single-rooted rounds for the alt-style classes (the last one is the
    termination deadline).
    """

    kind: str
    r_gst: int
    r_sr: int
    root: frozenset
    reappearances: Optional[tuple] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.r_sr < self.r_gst:
            raise ValueError("certificate needs r_sr >= r_gst")
        if self.reappearances is not None:
            rs = self.reappearances
            if list(rs) != sorted(set(rs)):
                raise ValueError("reappearance rounds must be strictly increasing")
            # re-appearances must fall strictly after the single phase ends
            phase = {"alt_liveness": "x", "mad": "y"}.get(self.kind, "D")
            x = self.params.get(phase)
            if rs and x is not None and rs[0] <= self.r_sr + x:
                raise ValueError(
                    f"first reappearance {rs[0]} must follow the single phase ending at "
                    f"{self.r_sr + x}"
                )

    @property
    def deadline(self) -> int:
        """Round by which every process must have decided under this certificate."""
        if self.reappearances:
            return self.reappearances[-1]
        return self.r_sr + 2 * self.params["D"]

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "r_gst": self.r_gst,
            "r_sr": self.r_sr,
            "root": sorted(self.root),
            "reappearances": list(self.reappearances) if self.reappearances else None,
            "params": dict(sorted(self.params.items())),
        }


@dataclass(frozen=True)
class SafetyWitness:
    """A root common for too many consecutive rounds without being the permanent one."""

    root: frozenset
    start: int
    end: Optional[int]  # None means the run extends forever

    def to_json_dict(self) -> dict:
        return {"root": sorted(self.root), "start": self.start, "end": self.end}


@dataclass(frozen=True)
class Run:
    """Maximal run of consecutive rounds on which ``root`` is a root component."""

    root: frozenset
    start: int
    end: Optional[int]  # None = forever

    def length(self) -> float:
        return math.inf if self.end is None else self.end - self.start + 1


def _scan_bound(l: LassoSequence, horizon: Optional[int] = None, extra: int = 0) -> int:
    base = len(l.prefix) + 2 * len(l.cycle) + 1 + extra
    return max(base, horizon or 0)


def maximal_root_runs(l: LassoSequence, scan_to: Optional[int] = None) -> list:
    """Every maximal common-root run starting within ``scan_to`` rounds.

    Finite runs carry exact bounds even when they extend past ``scan_to``;
    a run whose root is a root component of every cycle graph extends
    forever and is marked with ``end=None``.
    """
    scan_to = _scan_bound(l, scan_to)
    always_cycle_roots = frozenset.intersection(
        *[frozenset(root_components(g)) for g in l.cycle]
    )
    open_runs = {}
    runs = []
    for r in range(1, scan_to + 1):
        roots_now = root_components(l.graph(r))
        for root in list(open_runs):
            if root not in roots_now:
                runs.append(Run(root, open_runs.pop(root), r - 1))
        for root in roots_now:
            open_runs.setdefault(root, r)
    for root, start in open_runs.items():
        if root in always_cycle_roots:
            runs.append(Run(root, start, None))
        else:
            # the run must break within one further cycle pass
            r = scan_to + 1
            while root in root_components(l.graph(r)):
                r += 1
                if r > scan_to + len(l.cycle) + 1:
                    raise AssertionError("finite run failed to terminate within a cycle")
            runs.append(Run(root, start, r - 1))
    runs.sort(key=lambda run: (run.start, run.end if run.end is not None else math.inf, sorted(run.root)))
    return runs


def _single_round_map(l: LassoSequence, upto: int) -> dict:
    return {root: rounds for root, rounds in single_rooted_rounds(l, upto).items()}


def check_liveness(l: LassoSequence) -> Optional[AdversaryCertificate]:
    """Find the permanent, eventually-single common root of the sequence.

    Returns a certificate with the least ``r_gst`` such that some R is a
    maximal common root of all rounds from ``r_gst`` on and the single root
    of all rounds from some ``r_sr >= r_gst`` on; ``None`` if no root ever
    stabilizes that way.
    """
    probe = len(l.prefix) + len(l.cycle)
    if not all(len(root_components(g)) == 1 for g in l.cycle):
        return None
    cycle_roots = {next(iter(root_components(g))) for g in l.cycle}
    if len(cycle_roots) != 1:
        return None
    (root,) = cycle_roots
    r_sr = probe + 1
    r = probe
    while r >= 1 and root_components(l.graph(r)) == frozenset([root]):
        r_sr = r
        r -= 1
    if r_sr > probe:
        return None
    r_gst = r_sr
    r = r_sr - 1
    while r >= 1 and root in root_components(l.graph(r)):
        r_gst = r
        r -= 1
    return AdversaryCertificate("liveness", r_gst, r_sr, root)


def check_safety(l: LassoSequence, x: int, horizon: Optional[int] = None) -> Optional[SafetyWitness]:
    """Check that every over-long common root run is the permanent one.

    A root common for more than ``x`` consecutive rounds anywhere (scanning
    to ``horizon`` and across the cycle) must be the liveness root's final,
    infinite run.  Returns ``None`` when satisfied, otherwise the earliest
    offending run.
    """
    if x < 1:
        raise ValueError("safety parameter x must be >= 1")
    cert = check_liveness(l)
    for run in maximal_root_runs(l, horizon):
        if run.length() <= x:
            continue
        is_final_run = (
            cert is not None
            and run.end is None
            and run.root == cert.root
            and run.start == cert.r_gst
        )
        if not is_final_run:
            return SafetyWitness(run.root, run.start, run.end)
    return None


def check_estable(l: LassoSequence, D: int, horizon: Optional[int] = None) -> Optional[AdversaryCertificate]:
    """Conjunction of liveness, safety(D) and dynamic diameter D."""
    live = check_liveness(l)
    if live is None:
        return None
    if check_safety(l, D, horizon) is not None:
        return None
    if check_dynamic_diameter(l, D, horizon or l.default_horizon()) is not None:
        return None
    return AdversaryCertificate("estable", live.r_gst, live.r_sr, live.root, params={"D": D})


def diagnose_estable(l: LassoSequence, D: int, horizon: Optional[int] = None) -> dict:
    """Like :func:`check_estable` but reporting which condition failed and its witness."""
    live = check_liveness(l)
    if live is None:
        return {"ok": False, "failed": "liveness", "witness": None}
    safety = check_safety(l, D, horizon)
    if safety is not None:
        return {"ok": False, "failed": "safety", "witness": safety.to_json_dict()}
    diam = check_dynamic_diameter(l, D, horizon or l.default_horizon())
    if diam is not None:
        witness = {
            "root": sorted(diam.root),
            "rounds": list(diam.rounds),
            "process": diam.process,
        }
        return {"ok": False, "failed": "dynamic_diameter", "witness": witness}
    cert = AdversaryCertificate("estable", live.r_gst, live.r_sr, live.root, params={"D": D})
    return {"ok": True, "certificate": cert}


def _embedded_single_phase(l: LassoSequence, run: Run, x: int, scan_to: int) -> Optional[int]:
    # earliest start of x+1 consecutive rounds inside the run where the run's
    # root is the single root
    end = scan_to if run.end is None else min(run.end, scan_to + x + 1)
    target = frozenset([run.root])
    streak = 0
    for r in range(run.start, end + 1):
        if root_components(l.graph(r)) == target:
            streak += 1
            if streak >= x + 1:
                return r - x
        else:
            streak = 0
    return None


def check_alt_liveness(
    l: LassoSequence, D: int, x: int, horizon: Optional[int] = None
) -> Optional[AdversaryCertificate]:
    """Find a common root with an embedded (x+1)-round single phase plus D re-appearances.

    The phase starts at ``r_sr``; the re-appearances are single-rooted rounds
    strictly after ``r_sr + x``, of which at least D must exist by
    ``horizon``.  Among all qualifying runs, the lexicographically least
    ``(r_gst, r_sr, root)`` is certified.
    """
    if x < 0:
        raise ValueError("alt-liveness parameter x must be >= 0")
    horizon = horizon or l.default_horizon()
    scan_to = _scan_bound(l, horizon, extra=x + 1)
    singles = _single_round_map(l, max(scan_to, horizon))
    best = None
    for run in maximal_root_runs(l, scan_to):
        if run.length() < x + 1:
            continue
        alpha_prime = _embedded_single_phase(l, run, x, scan_to)
        if alpha_prime is None:
            continue
        reapp = [r for r in singles.get(run.root, []) if alpha_prime + x < r <= horizon]
        if len(reapp) < D:
            continue
        key = (run.start, alpha_prime, sorted(run.root))
        if best is None or key < best[0]:
            cert = AdversaryCertificate(
                "alt_liveness",
                run.start,
                alpha_prime,
                run.root,
                reappearances=tuple(reapp[:D]),
                params={"D": D, "x": x},
            )
            best = (key, cert)
    return best[1] if best else None


def check_alt_safety(l: LassoSequence, x: int, horizon: Optional[int] = None) -> Optional[SafetyWitness]:
    """The earliest (x+1)-round-or-longer common-root run must embed a single phase.

    Later long runs are unconstrained.  When several qualifying runs start at
    the same earliest round, all of them must embed an (x+1)-round single
    phase.  Returns ``None`` when satisfied, otherwise the offending run.
    """
    if x < 0:
        raise ValueError("alt-safety parameter x must be >= 0")
    scan_to = _scan_bound(l, horizon, extra=x + 1)
    long_runs = [run for run in maximal_root_runs(l, scan_to) if run.length() >= x + 1]
    if not long_runs:
        return None
    earliest = min(run.start for run in long_runs)
    for run in long_runs:
        if run.start != earliest:
            continue
        if _embedded_single_phase(l, run, x, scan_to) is None:
            return SafetyWitness(run.root, run.start, run.end)
    return None


def check_alt_estable(
    l: LassoSequence, D: int, horizon: Optional[int] = None
) -> Optional[AdversaryCertificate]:
    """Conjunction of alt_safety(D), alt_liveness(D, x=D) and dynamic diameter D."""
    if check_alt_safety(l, D, horizon) is not None:
        return None
    live = check_alt_liveness(l, D, D, horizon)
    if live is None:
        return None
    if check_dynamic_diameter(l, D, horizon or l.default_horizon()) is not None:
        return None
    return AdversaryCertificate(
        "alt_estable",
        live.r_gst,
        live.r_sr,
        live.root,
        reappearances=live.reappearances,
        params={"D": D},
    )


def check_mad(
    l: LassoSequence, x: int, y: int, D: int, horizon: Optional[int] = None
) -> Optional[AdversaryCertificate]:
    """alt_safety(x) and alt_liveness with phase parameter y, under dynamic diameter D.

    The checker certifies any such sequence regardless of whether consensus
    is solvable for the given (x, y).
    """
    if check_alt_safety(l, x, horizon) is not None:
        return None
    live = check_alt_liveness(l, D, y, horizon)
    if live is None:
        return None
    if check_dynamic_diameter(l, D, horizon or l.default_horizon()) is not None:
        return None
    return AdversaryCertificate(
        "mad",
        live.r_gst,
        live.r_sr,
        live.root,
        reappearances=live.reappearances,
        params={"D": D, "x": x, "y": y},
    )


@dataclass(frozen=True)
class VsrcResult:
    ok: bool
    window_start: Optional[int] = None
    reason: Optional[str] = None

    def to_json_dict(self) -> dict:
        return {"ok": self.ok, "window_start": self.window_start, "reason": self.reason}


def check_vsrc(l: LassoSequence, window: int, D: int, horizon: Optional[int] = None) -> VsrcResult:
    """Look for ``window`` consecutive rounds with an identical root-component set,
    under a dynamic diameter of D."""
    if window < 1:
        raise ValueError("window must be >= 1")
    diam = check_dynamic_diameter(l, D, horizon or l.default_horizon())
    if diam is not None:
        return VsrcResult(False, reason=f"dynamic diameter {D} violated: {diam.describe()}")
    # window starts repeat with the cycle beyond the prefix
    for start in range(1, len(l.prefix) + len(l.cycle) + 1):
        sets = root_components(l.graph(start))
        if all(root_components(l.graph(r)) == sets for r in range(start + 1, start + window)):
            return VsrcResult(True, window_start=start)
    return VsrcResult(False, reason=f"no {window}-round window with a stable root-component set")


# --- generators -------------------------------------------------------------


@dataclass(frozen=True)
class AdversaryParams:
    """Seeded generator parameters; the seed fully determines the output."""

    n: int
    D: int
    seed: int = 0
    r_gst_target: Optional[int] = None
    r_sr_target: Optional[int] = None
    x: Optional[int] = None
    y: Optional[int] = None

    def validated(self) -> "AdversaryParams":
        if self.n < 2:
            raise InfeasibleParamsError(f"need at least 2 processes, got n={self.n}")
        if not (1 <= self.D <= self.n - 1):
            raise InfeasibleParamsError(f"D must satisfy 1 <= D <= n-1, got D={self.D}, n={self.n}")
        g, s = self.r_gst_target, self.r_sr_target
        if g is not None and g < 1:
            raise InfeasibleParamsError("r_gst_target must be >= 1")
        if g is not None and s is not None and s < g:
            raise InfeasibleParamsError("need r_sr_target >= r_gst_target")
        return self


def _single_rooted_graph(rng: random.Random, n: int, root: frozenset, D: int) -> CommGraph:
    # Interior of the root is complete, every outside process has a direct
    # in-edge from the root, and outside processes get no out-edges: any two
    # such graphs in a row spread all root states system-wide, and the
    # approximations never show phantom extra roots during the single phase.
    members = sorted(root)
    rest = [p for p in range(1, n + 1) if p not in root]
    edges = {(u, v) for u in members for v in members if u != v}
    for p in rest:
        edges.add((rng.choice(members), p))
    if D == 1:
        # a single round must already spread every member's state everywhere
        edges |= {(q, p) for q in members for p in rest}
    return CommGraph.of(n, edges)


def _multi_rooted_graph(rng: random.Random, n: int, root_sets: list) -> CommGraph:
    # roots(G) == set(root_sets): each planted set is internally complete with
    # no external in-edges, every leftover vertex hangs off some root member.
    edges = set()
    members_union = []
    for rs in root_sets:
        ms = sorted(rs)
        members_union.extend(ms)
        edges |= {(u, v) for u in ms for v in ms if u != v}
    claimed = set(members_union)
    rest = [p for p in range(1, n + 1) if p not in claimed]
    for p in rest:
        edges.add((rng.choice(members_union), p))
        if rest and rng.random() < 0.4:
            q = rng.choice(rest)
            if q != p:
                edges.add((q, p))
    return CommGraph.of(n, edges)


def _sample_root_family(
    rng: random.Random, n: int, forbidden: set, min_roots: int
) -> Optional[list]:
    # disjoint root sets, none of which is in `forbidden`
    for _ in range(32):
        pids = list(range(1, n + 1))
        rng.shuffle(pids)
        k = rng.randint(min_roots, max(min_roots, min(n, 3)))
        family = []
        i = 0
        for j in range(k):
            remaining = len(pids) - i
            slots_left = k - j
            if remaining < slots_left:
                break
            size = 1 if slots_left > 1 else rng.randint(1, min(2, remaining))
            if remaining - size < slots_left - 1:
                size = 1
            family.append(frozenset(pids[i : i + size]))
            i += size
        if len(family) == k and not any(fs in forbidden for fs in family):
            return family
    return None


def _chaotic_rounds(
    rng: random.Random,
    n: int,
    count: int,
    counts: dict,
    excluded: set,
    D: int,
) -> Optional[list]:
    # `counts` tracks consecutive appearances per root set and is mutated;
    # a set reaching D consecutive rounds is forced to break.
    graphs = []
    min_roots = 2 if n >= 3 else 1
    for _ in range(count):
        forbidden = {rs for rs, c in counts.items() if c >= D} | excluded
        family = _sample_root_family(rng, n, forbidden, min_roots)
        if family is None:
            return None
        graphs.append(_multi_rooted_graph(rng, n, family))
        new_counts = {rs: counts.get(rs, 0) + 1 for rs in family}
        counts.clear()
        counts.update(new_counts)
    return graphs


def _pick_root(rng: random.Random, n: int, max_size: int) -> frozenset:
    size = rng.randint(1, max(1, max_size))
    return frozenset(rng.sample(range(1, n + 1), size))


def _distinct_cycle(rng: random.Random, n: int, root: frozenset, D: int, want: int = 3) -> list:
    graphs = []
    for _ in range(want * 4):
        g = _single_rooted_graph(rng, n, root, D)
        if g not in graphs:
            graphs.append(g)
        if len(graphs) >= want:
            break
    return graphs if len(graphs) >= 2 else graphs[:1]


def generate_estable(params: AdversaryParams):
    """Sample a lasso certified by :func:`check_estable` with the requested
    stabilization rounds.

    Pre-stabilization rounds are pseudo-random multi-rooted graphs whose root
    runs never exceed D; from ``r_sr_target`` on, the cycle repeats distinct
    single-rooted graphs.  Raises :class:`InfeasibleParamsError` for
    unsatisfiable parameters and :class:`GenerationRetryError` if validation
    keeps failing.
    """
    params = params.validated()
    n, D = params.n, params.D
    rng0 = random.Random(f"estable:{params.seed}")
    r_sr = params.r_sr_target if params.r_sr_target is not None else rng0.randint(1, 8)
    r_gst = params.r_gst_target if params.r_gst_target is not None else r_sr
    if not (1 <= r_gst <= r_sr):
        raise InfeasibleParamsError(f"need 1 <= r_gst <= r_sr, got ({r_gst}, {r_sr})")
    if r_gst < r_sr and n < 3:
        raise InfeasibleParamsError(
            "a 2-process graph cannot hold a common-but-not-single root: r_gst must equal r_sr"
        )
    lead_in = r_sr - r_gst
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        rng = random.Random(f"estable:{params.seed}:{attempt}")
        max_size = n - 1 if lead_in <= D else n - 2
        if max_size < 1:
            raise InfeasibleParamsError(
                f"no root set admits a {lead_in}-round common-but-not-single lead-in with n={n}, D={D}"
            )
        root = _pick_root(rng, n, max_size)
        counts: dict = {}
        excluded = {root} if n >= 3 else set()
        chaos = _chaotic_rounds(rng, n, r_gst - 1, counts, excluded, D)
        if chaos is None:
            continue
        if n == 2 and r_gst > 1 and root in root_components(chaos[-1]):
            continue
        prefix = list(chaos)
        companions = [frozenset([p]) for p in range(1, n + 1) if p not in root]
        ok = True
        for _ in range(lead_in):
            usable = [c for c in companions if counts.get(c, 0) < D]
            if not usable:
                ok = False
                break
            comp = rng.choice(usable)
            prefix.append(_multi_rooted_graph(rng, n, [root, comp]))
            counts = {root: counts.get(root, 0) + 1, comp: counts.get(comp, 0) + 1}
        if not ok:
            continue
        cycle = _distinct_cycle(rng, n, root, D)
        candidate = LassoSequence(tuple(prefix), tuple(cycle))
        cert = check_estable(candidate, D)
        if (
            cert is not None
            and cert.r_gst == r_gst
            and cert.r_sr == r_sr
            and cert.root == root
        ):
            return candidate, cert
    raise GenerationRetryError(
        f"estable generation failed after {MAX_GENERATION_ATTEMPTS} attempts (params={params})"
    )


def generate_alt_estable(
    params: AdversaryParams,
    tail: str = "single",
    gap_range: tuple = (0, 3),
    spurious: Optional[bool] = None,
):
    """Sample a lasso certified by :func:`check_alt_estable`.

    Plants a common root with an embedded (D+1)-round single phase at
    ``r_sr_target``, interleaves multi-rooted gap rounds, and places the D
    guaranteed single-rooted re-appearances.  ``tail`` selects what repeats
    forever after the last re-appearance: ``"single"`` keeps the root single
    forever, ``"sparse"`` repeats isolated re-appearances separated by
    multi-rooted rounds.  ``spurious`` plants an earlier embedded-single
    common root on a different set (decided-upon early by the algorithm but
    distinct from the certified root); by default the seed decides.

    The checker's certificate may be lexicographically earlier than the
    planted one (the earliest embedded-single run wins); callers needing the
    planted deadline should use the returned certificate.
    """
    params = params.validated()
    n, D = params.n, params.D
    if tail not in ("single", "sparse"):
        raise ValueError(f"unknown tail style {tail!r}")
    rng0 = random.Random(f"altestable:{params.seed}")
    r_sr = params.r_sr_target if params.r_sr_target is not None else rng0.randint(D + 2, D + 8)
    if params.r_gst_target is not None:
        r_gst = params.r_gst_target
    elif n >= 3:
        r_gst = max(1, r_sr - rng0.randint(0, D))
    else:
        r_gst = r_sr
    if not (1 <= r_gst <= r_sr):
        raise InfeasibleParamsError(f"need 1 <= r_gst <= r_sr, got ({r_gst}, {r_sr})")
    lead_in = r_sr - r_gst
    if lead_in > 0 and n < 3:
        raise InfeasibleParamsError(
            "a 2-process graph cannot hold a common-but-not-single root: r_gst must equal r_sr"
        )
    if spurious is None:
        spurious = n >= 4 and r_gst > 3 * D + 4 and rng0.random() < 0.5
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        rng = random.Random(f"altestable:{params.seed}:{attempt}")
        max_size = n - 1 if lead_in <= D else n - 2
        if max_size < 1:
            raise InfeasibleParamsError(
                f"no root set admits a {lead_in}-round common-but-not-single lead-in with n={n}, D={D}"
            )
        root = _pick_root(rng, n, max_size)
        excluded = {root} if n >= 3 else set()
        counts: dict = {}
        prefix: list = []

        spur_cert = None
        chaos_budget = r_gst - 1
        if spurious and chaos_budget >= D + 1 + 2 * (D + 2):
            pre = rng.randint(1, chaos_budget - (D + 1) - (2 * D + 3))
            others = [frozenset([p]) for p in range(1, n + 1) if p not in root]
            spur_root = rng.choice(others)
            head = _chaotic_rounds(rng, n, pre, counts, excluded | {spur_root}, D)
            if head is None:
                continue
            prefix += head
            for _ in range(D + 1):
                prefix.append(_single_rooted_graph(rng, n, spur_root, D))
            spur_cert = (spur_root, pre + 1, pre + D + 1)
            counts = {spur_root: D + 1}
            rest = chaos_budget - len(prefix)
            tail_chaos = _chaotic_rounds(rng, n, rest, counts, excluded | {spur_root}, D)
            if tail_chaos is None:
                continue
            prefix += tail_chaos
        else:
            spur_cert = None
            chaos = _chaotic_rounds(rng, n, chaos_budget, counts, excluded, D)
            if chaos is None:
                continue
            prefix += chaos
        if n == 2 and r_gst > 1 and prefix and root in root_components(prefix[-1]):
            continue

        companions = [frozenset([p]) for p in range(1, n + 1) if p not in root]
        ok = True
        for _ in range(lead_in):
            usable = [c for c in companions if counts.get(c, 0) < D]
            if not usable:
                ok = False
                break
            comp = rng.choice(usable)
            prefix.append(_multi_rooted_graph(rng, n, [root, comp]))
            counts = {root: counts.get(root, 0) + 1, comp: counts.get(comp, 0) + 1}
        if not ok:
            continue

        for _ in range(D + 1):  # the embedded single phase [r_sr, r_sr + D]
            prefix.append(_single_rooted_graph(rng, n, root, D))
        counts = {root: D + 1}

        reappearances = []
        for _ in range(D):
            gap = rng.randint(*gap_range)
            gap_graphs = _chaotic_rounds(rng, n, gap, counts, excluded, D)
            if gap_graphs is None:
                ok = False
                break
            prefix += gap_graphs
            prefix.append(_single_rooted_graph(rng, n, root, D))
            reappearances.append(len(prefix))
            counts = {root: counts.get(root, 0) + 1} if gap == 0 else {root: 1}
        if not ok:
            continue

        if tail == "single":
            cycle = _distinct_cycle(rng, n, root, D)
        else:
            gap = max(1, rng.randint(*gap_range))
            gap_counts = dict(counts)
            gap_graphs = _chaotic_rounds(rng, n, gap, gap_counts, excluded, D)
            if gap_graphs is None:
                continue
            cycle = gap_graphs + [_single_rooted_graph(rng, n, root, D)]

        candidate = LassoSequence(tuple(prefix), tuple(cycle))
        horizon = max(candidate.default_horizon(), reappearances[-1] + 1)
        cert = check_alt_estable(candidate, D, horizon)
        if cert is None:
            continue
        planted = AdversaryCertificate(
            "alt_estable",
            r_gst,
            r_sr,
            root,
            reappearances=tuple(reappearances),
            params={"D": D, "spurious": sorted(spur_cert[0]) if spur_cert else None},
        )
        if (cert.r_gst, cert.r_sr) > (planted.r_gst, planted.r_sr):
            continue
        return candidate, planted
    raise GenerationRetryError(
        f"alt_estable generation failed after {MAX_GENERATION_ATTEMPTS} attempts (params={params})"
    )
