"""Homogeneous dendritic trees: construction, activity propagation, and brute-force checks.

Nodes are numbered breadth-first: the soma is node 0 at level 0, level h holds
n^h nodes, and the N = n^H synapses sit at level H. Within a level, node q has
children q*n .. q*n + n - 1 on the next level. Leaves are addressed by their
position 0 .. N-1 on level H.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
import math
from typing import Iterable, Iterator, Literal, Sequence

import numpy as np

from ..config import load_config
from ..constants import DEFAULT_PHI_MAX
from ..errors import ArgumentError, CapacityError, SaturationViolationError, UnreachableThresholdError
from ..logging import log_tree_dynamical, log_tree_search
from ..types import JsonObject
from .fanin_analytics import BiasPoint, TreeTopology, point_activity_fraction, required_inputs, synapse_flux_quota
from .inductance_designer import CollectionLoopDesign, applied_flux_collection, check_collection_constraint
from .squid_dynamics import ResponseLookup, SquidParams, simulate_rfq, simulate_rfq_batch

SearchMode = Literal['exhaustive', 'constructive', 'auto']


@dataclass(frozen=True)
class TreeNode:
    index: int
    level: int
    position: int
    children: tuple[int, ...]


@dataclass(frozen=True)
class DendriticTree:
    topology: TreeTopology
    bias_ratio: float

    @property
    def n(self) -> int:
        return self.topology.n

    @property
    def h_depth(self) -> int:
        return self.topology.h_depth

    @property
    def leaf_count(self) -> int:
        return self.topology.n_synapses

    @property
    def node_count(self) -> int:
        return self.topology.node_count

    @property
    def dendrite_count(self) -> int:
        return self.topology.dendrite_count

    def level_offset(self, level: int) -> int:
        return sum(self.n**h for h in range(level))

    def level_size(self, level: int) -> int:
        return self.n**level

    def node(self, index: int) -> TreeNode:
        if not 0 <= index < self.node_count:
            raise ArgumentError(f'node index {index} outside [0, {self.node_count})')
        level = 0
        offset = 0
        while index >= offset + self.level_size(level):
            offset += self.level_size(level)
            level += 1
        position = index - offset
        if level == self.h_depth:
            children: tuple[int, ...] = ()
        else:
            child_offset = offset + self.level_size(level)
            first = child_offset + position * self.n
            children = tuple(range(first, first + self.n))
        return TreeNode(index=index, level=level, position=position, children=children)

    def nodes(self) -> Iterator[TreeNode]:
        for index in range(self.node_count):
            yield self.node(index)

    @property
    def node_threshold_fraction(self) -> float:
        return point_activity_fraction(BiasPoint(self.bias_ratio))

    @property
    def node_threshold_flux(self) -> float:
        """Threshold flux of every dendrite and the soma, PHI0 units."""
        return self.node_threshold_fraction * DEFAULT_PHI_MAX

    @property
    def required_per_node(self) -> int:
        # a zero threshold flux still needs one firing input
        return max(1, required_inputs(self.n, self.node_threshold_fraction))


def build_tree(n: int, h_depth: int, bias_ratio: float) -> DendriticTree:
    topology = TreeTopology(n, h_depth)
    BiasPoint(bias_ratio)
    cap = load_config().max_tree_nodes
    if topology.node_count > cap:
        raise CapacityError(
            f'tree with n={n} H={h_depth} has {topology.node_count} nodes, above the cap of {cap}'
        )
    return DendriticTree(topology=topology, bias_ratio=float(bias_ratio))


@dataclass(frozen=True)
class SynapseState:
    """Per-leaf input state: saturation flags (binary) or DI currents in amperes (analog)."""

    saturated: tuple[bool, ...] | None = None
    currents: tuple[float, ...] | None = None
    i_sat: float | None = None
    decay_tau: float | None = None

    def __post_init__(self) -> None:
        if (self.saturated is None) == (self.currents is None):
            raise ArgumentError('SynapseState needs exactly one of saturated flags or currents')
        if self.currents is not None:
            if self.i_sat is None or not self.i_sat > 0:
                raise ArgumentError('analog SynapseState needs a positive i_sat')
            for index, current in enumerate(self.currents):
                if current < 0:
                    raise ArgumentError(f'leaf {index} current is negative: {current!r}')
                if current > self.i_sat * (1.0 + 1e-12):
                    raise SaturationViolationError(
                        f'leaf {index} current {current:.6g} A exceeds i_sat {self.i_sat:.6g} A'
                    )
        if self.decay_tau is not None and not self.decay_tau > 0:
            raise ArgumentError(f'decay_tau must be positive, got {self.decay_tau!r}')

    @classmethod
    def binary(cls, saturated: Iterable[bool]) -> SynapseState:
        return cls(saturated=tuple(bool(flag) for flag in saturated))

    @classmethod
    def analog(cls, currents: Iterable[float], i_sat: float, decay_tau: float | None = None) -> SynapseState:
        return cls(currents=tuple(float(c) for c in currents), i_sat=i_sat, decay_tau=decay_tau)

    @property
    def is_analog(self) -> bool:
        return self.currents is not None

    def __len__(self) -> int:
        values = self.currents if self.currents is not None else self.saturated
        return len(values or ())

    def active_leaves(self) -> frozenset[int]:
        if self.saturated is not None:
            return frozenset(i for i, flag in enumerate(self.saturated) if flag)
        assert self.currents is not None and self.i_sat is not None
        return frozenset(i for i, c in enumerate(self.currents) if c >= self.i_sat)

    def decayed(self, elapsed: float) -> SynapseState:
        """DI currents after `elapsed` seconds of exponential leak; unchanged when leak is off."""
        if self.currents is None or self.decay_tau is None or elapsed <= 0:
            return self
        factor = math.exp(-elapsed / self.decay_tau)
        return SynapseState(
            currents=tuple(c * factor for c in self.currents),
            i_sat=self.i_sat,
            decay_tau=self.decay_tau,
        )


@dataclass(frozen=True)
class PropagationResult:
    """Per-level arrays for levels 0 .. H-1 (the SQUID nodes); level H holds the synapses."""

    node_flux: tuple[np.ndarray, ...]
    node_fired: tuple[np.ndarray, ...]
    leaf_active: np.ndarray
    soma_fired: bool
    node_rate: tuple[np.ndarray, ...] | None = None
    node_current: tuple[np.ndarray, ...] | None = None

    @property
    def soma_flux(self) -> float:
        return float(self.node_flux[0][0])

    @property
    def soma_rate(self) -> float | None:
        if self.node_rate is None:
            return None
        return float(self.node_rate[0][0])

    def fired_counts(self) -> list[int]:
        """Fired-node count per level 0 .. H (level H counts active synapses)."""
        counts = [int(np.count_nonzero(level)) for level in self.node_fired]
        counts.append(int(np.count_nonzero(self.leaf_active)))
        return counts

    def max_flux(self) -> float:
        return max(float(np.max(level)) for level in self.node_flux)


def _as_active_mask(tree: DendriticTree, active_leaves: Iterable[int] | SynapseState) -> np.ndarray:
    if isinstance(active_leaves, SynapseState):
        if len(active_leaves) != tree.leaf_count:
            raise ArgumentError(f'expected {tree.leaf_count} leaves, got {len(active_leaves)}')
        active_leaves = active_leaves.active_leaves()
    mask = np.zeros(tree.leaf_count, dtype=bool)
    for leaf in active_leaves:
        if not 0 <= leaf < tree.leaf_count:
            raise ArgumentError(f'leaf {leaf} outside [0, {tree.leaf_count})')
        mask[leaf] = True
    return mask


def propagate_binary(tree: DendriticTree, active_leaves: Iterable[int] | SynapseState) -> PropagationResult:
    """Saturated-or-silent cascade: a node fires when its saturated children supply its threshold flux."""
    leaf_mask = _as_active_mask(tree, active_leaves)
    quota = synapse_flux_quota(tree.topology)
    required = tree.required_per_node

    fluxes: list[np.ndarray] = []
    fired: list[np.ndarray] = []
    below = leaf_mask
    for level in range(tree.h_depth - 1, -1, -1):
        counts = below.reshape(tree.level_size(level), tree.n).sum(axis=1)
        fluxes.append(counts * quota)
        below = counts >= required
        fired.append(below)

    fluxes.reverse()
    fired.reverse()
    return PropagationResult(
        node_flux=tuple(fluxes),
        node_fired=tuple(fired),
        leaf_active=leaf_mask,
        soma_fired=bool(fired[0][0]),
    )


# popcount of every byte value
_BYTE_POPCOUNT = np.array([bin(value).count('1') for value in range(256)], dtype=np.uint8)
SEARCH_CHUNK = 1 << 20


def _popcount(values: np.ndarray) -> np.ndarray:
    return (
        _BYTE_POPCOUNT[values & 0xFF]
        + _BYTE_POPCOUNT[(values >> 8) & 0xFF]
        + _BYTE_POPCOUNT[(values >> 16) & 0xFF]
        + _BYTE_POPCOUNT[values >> 24]
    )


def _soma_fires_masks(tree: DendriticTree, masks: np.ndarray, required: int) -> np.ndarray:
    """Binary cascade over many leaf sets at once; leaf i is bit leaf_count - 1 - i of a mask."""
    n = tree.n
    leaves = tree.leaf_count
    group = np.uint32((1 << n) - 1)
    parents = leaves // n
    fired = np.empty((parents, masks.size), dtype=bool)
    for q in range(parents):
        fired[q] = _popcount((masks >> np.uint32(leaves - (q + 1) * n)) & group) >= required
    for _ in range(tree.h_depth - 1):
        fired = fired.reshape(-1, n, masks.size).sum(axis=1) >= required
    return fired[0]


def _mask_leaves(mask: int, leaves: int) -> tuple[int, ...]:
    return tuple(leaf for leaf in range(leaves) if mask >> (leaves - 1 - leaf) & 1)


@dataclass(frozen=True)
class MinActiveResult:
    count: int
    witness: tuple[int, ...]
    mode: Literal['exhaustive', 'constructive']
    evaluations: int = 0


def _exhaustive_min(tree: DendriticTree) -> MinActiveResult:
    cap = load_config().exhaustive_leaf_cap
    if tree.leaf_count > cap:
        raise CapacityError(
            f'exhaustive search needs at most {cap} leaves, tree has {tree.leaf_count}; '
            'use the constructive mode'
        )
    required = tree.required_per_node
    leaves = tree.leaf_count
    best_size = leaves + 1
    best_mask = -1
    evaluations = 0
    for start in range(0, 1 << leaves, SEARCH_CHUNK):
        masks = np.arange(start, min(start + SEARCH_CHUNK, 1 << leaves), dtype=np.uint32)
        sizes = _popcount(masks)
        # sets larger than the best hit so far cannot improve it
        keep = sizes <= best_size
        masks = masks[keep]
        sizes = sizes[keep]
        if masks.size == 0:
            continue
        evaluations += masks.size
        hits = _soma_fires_masks(tree, masks, required)
        if not hits.any():
            continue
        size = int(sizes[hits].min())
        # with leaf 0 as the top bit, the largest mask of a size is its lexicographically first set
        mask = int(masks[hits & (sizes == size)].max())
        if size < best_size or (size == best_size and mask > best_mask):
            best_size, best_mask = size, mask

    if best_mask < 0:
        raise UnreachableThresholdError(
            tree.node_threshold_fraction,
            f'no leaf subset fires the soma at bias_ratio={tree.bias_ratio:.6g}',
        )
    log_tree_search('exhaustive', tree.n, tree.h_depth, tree.bias_ratio, best_size, evaluations)
    return MinActiveResult(best_size, _mask_leaves(best_mask, leaves), 'exhaustive', evaluations)


def constructive_witness(tree: DendriticTree) -> tuple[int, ...]:
    """The first p leaves of the first p children of ... of the first p children of the soma."""
    fraction = tree.node_threshold_fraction
    if fraction > 1.0:
        raise UnreachableThresholdError(fraction)
    p = tree.required_per_node
    weights = [tree.n ** (tree.h_depth - 1 - depth) for depth in range(tree.h_depth)]
    return tuple(
        sum(digit * weight for digit, weight in zip(digits, weights))
        for digits in product(range(p), repeat=tree.h_depth)
    )


def _constructive_min(tree: DendriticTree) -> MinActiveResult:
    witness = constructive_witness(tree)
    log_tree_search('constructive', tree.n, tree.h_depth, tree.bias_ratio, len(witness))
    return MinActiveResult(len(witness), witness, 'constructive')


def min_active_synapses(tree: DendriticTree, mode: SearchMode = 'auto') -> MinActiveResult:
    """Fewest saturated synapses that fire the soma, with a witness set.

    exhaustive: ordered enumeration by subset size, lexicographic within a size;
    the first hit is minimal and lexicographically smallest. constructive: p^H
    clustered leaves. auto picks exhaustive when the tree fits under the cap.
    """
    if mode == 'exhaustive':
        return _exhaustive_min(tree)
    if mode == 'constructive':
        return _constructive_min(tree)
    if mode == 'auto':
        if tree.leaf_count <= load_config().exhaustive_leaf_cap:
            return _exhaustive_min(tree)
        return _constructive_min(tree)
    raise ArgumentError(f'unknown search mode {mode!r}')


def analytic_min_active(tree: DendriticTree) -> int:
    """P = p^H with p = ceil(n f)."""
    fraction = tree.node_threshold_fraction
    if fraction > 1.0:
        raise UnreachableThresholdError(fraction)
    return tree.required_per_node**tree.h_depth


@dataclass
class DynamicalContext:
    """SQUID, circuit and rate lookup shared by repeated dynamical propagations of one tree."""

    squid: SquidParams
    design: CollectionLoopDesign
    gain: float
    lookup: ResponseLookup | None = None
    max_rate: float = 0.0
    exact: bool = False
    t_settle: float | None = None
    t_measure: float | None = None

    def rates(self, fluxes: np.ndarray) -> np.ndarray:
        if self.exact or self.lookup is None:
            return simulate_rfq_batch(self.squid, fluxes, self.t_settle, self.t_measure)
        return self.lookup.rate(fluxes)


def dynamical_context(
    tree: DendriticTree,
    squid: SquidParams,
    design: CollectionLoopDesign,
    gain: float | None = None,
    exact: bool = False,
    lookup_points: int | None = None,
    t_settle: float | None = None,
    t_measure: float | None = None,
    lookup: ResponseLookup | None = None,
    match_screening: bool = True,
) -> DynamicalContext:
    """Bind a SQUID, circuit and rate source to one tree.

    With match_screening the SQUID keeps its junctions but takes the beta_L whose
    quasi-static threshold equals the tree's node threshold flux, so a node driven to
    phi_max fires whenever the binary cascade says it can.
    """
    if design.n != tree.n:
        raise ArgumentError(f'design fan-in {design.n} does not match tree fan-in {tree.n}')
    check_collection_constraint(design)
    if match_screening:
        squid = squid.with_matched_screening(tree.bias_ratio)
    else:
        squid = squid.with_bias(tree.bias_ratio)

    if exact:
        lookup = None
        max_rate = simulate_rfq(squid, design.phi_max, t_settle, t_measure)
    else:
        if lookup is None or lookup.params != squid or lookup.phi_max != design.phi_max:
            lookup = ResponseLookup(squid, design.phi_max, lookup_points, t_settle, t_measure)
        max_rate = lookup.max_rate

    if gain is None:
        # curve maximum maps exactly to a saturated DI loop
        gain = design.i_sat / max_rate if max_rate > 0 else 0.0
    if gain < 0:
        raise ArgumentError(f'gain must be non-negative, got {gain!r}')
    return DynamicalContext(
        squid=squid,
        design=design,
        gain=gain,
        lookup=lookup,
        max_rate=max_rate,
        exact=exact,
        t_settle=t_settle,
        t_measure=t_measure,
    )


def propagate_dynamical(
    tree: DendriticTree,
    leaf_currents: SynapseState,
    squid: SquidParams,
    design: CollectionLoopDesign | None = None,
    context: DynamicalContext | None = None,
    gain: float | None = None,
    exact: bool = False,
) -> PropagationResult:
    """Steady-state flux, fluxon rate and DI current of every node, synapses to soma.

    A node's output DI current is min(gain * r_fq, i_sat); with the default gain the
    curve maximum maps exactly to i_sat.
    """
    if not leaf_currents.is_analog:
        raise ArgumentError('dynamical propagation needs analog leaf currents')
    if len(leaf_currents) != tree.leaf_count:
        raise ArgumentError(f'expected {tree.leaf_count} leaf currents, got {len(leaf_currents)}')
    if context is None:
        if design is None:
            raise ArgumentError('dynamical propagation needs a CollectionLoopDesign')
        context = dynamical_context(tree, squid, design, gain=gain, exact=exact)
    design = context.design
    if leaf_currents.i_sat is not None and not math.isclose(leaf_currents.i_sat, design.i_sat, rel_tol=1e-12):
        raise ArgumentError('leaf i_sat does not match the design saturation current')

    currents = np.asarray(leaf_currents.currents, dtype=float)
    leaf_mask = currents >= design.i_sat
    fluxes: list[np.ndarray] = []
    fired: list[np.ndarray] = []
    rates: list[np.ndarray] = []
    outputs: list[np.ndarray] = []
    below = currents
    for level in range(tree.h_depth - 1, -1, -1):
        grouped = below.reshape(tree.level_size(level), tree.n)
        flux = np.array([applied_flux_collection(design, list(row)) for row in grouped])
        flux = np.minimum(flux, design.phi_max)
        rate = context.rates(flux)
        below = np.minimum(context.gain * rate, design.i_sat)
        fluxes.append(flux)
        rates.append(rate)
        fired.append(rate > 0)
        outputs.append(below)

    for collection in (fluxes, fired, rates, outputs):
        collection.reverse()
    result = PropagationResult(
        node_flux=tuple(fluxes),
        node_fired=tuple(fired),
        leaf_active=leaf_mask,
        soma_fired=bool(rates[0][0] > 0),
        node_rate=tuple(rates),
        node_current=tuple(outputs),
    )
    log_tree_dynamical(tree.n, tree.h_depth, result.soma_rate or 0.0, result.soma_fired, context.exact)
    return result


def propagate_time_series(
    tree: DendriticTree,
    state: SynapseState,
    times: Sequence[float],
    context: DynamicalContext,
) -> list[tuple[float, PropagationResult]]:
    """Steady-state propagation at each sample time while the synaptic currents leak away."""
    if any(b < a for a, b in zip(times, times[1:])):
        raise ArgumentError('times must be non-decreasing')
    return [
        (float(t), propagate_dynamical(tree, state.decayed(float(t)), context.squid, context=context))
        for t in times
    ]


def tree_snapshot(tree: DendriticTree, result: PropagationResult | None = None) -> JsonObject:
    payload: JsonObject = {
        'topology': {
            'n': tree.n,
            'H': tree.h_depth,
            'n_synapses': tree.leaf_count,
            'node_count': tree.node_count,
            'dendrite_count': tree.dendrite_count,
        },
        'bias_ratio': tree.bias_ratio,
        'node_threshold_flux': tree.node_threshold_flux,
    }
    if result is None:
        return payload

    levels: list[JsonObject] = []
    for level, flux in enumerate(result.node_flux):
        entry: JsonObject = {
            'level': level,
            'flux': [float(v) for v in flux],
            'fired': [bool(v) for v in result.node_fired[level]],
        }
        if result.node_rate is not None:
            entry['r_fq'] = [float(v) for v in result.node_rate[level]]
        levels.append(entry)
    payload['levels'] = levels
    payload['active_leaves'] = [int(i) for i in np.flatnonzero(result.leaf_active)]
    payload['soma_fired'] = result.soma_fired
    return payload
