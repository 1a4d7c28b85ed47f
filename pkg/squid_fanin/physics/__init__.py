from .fanin_analytics import (
    ActivityResult,
    BiasPoint,
    TreeGeometry,
    TreeTopology,
    point_activity_fraction,
    synapse_flux_quota,
    total_unit_fraction,
    tree_activity_fraction,
    tree_geometry,
)
from .inductance_designer import (
    CollectionLoopDesign,
    DrLoopSpec,
    NoCollectionDesign,
    applied_flux_collection,
    crosstalk_current,
    design_ldi2_collection,
    design_no_collection,
    sfq_coupling,
    size_squid,
    threshold_fraction_circuit,
    vary_ic_no_collection,
)
from .squid_dynamics import (
    ResponseCurve,
    ResponseLookup,
    SquidParams,
    find_threshold_flux,
    simulate_rfq,
    sweep_response,
)
from .tree_engine import (
    DendriticTree,
    PropagationResult,
    SynapseState,
    build_tree,
    min_active_synapses,
    propagate_binary,
    propagate_dynamical,
)

__all__ = [
    'ActivityResult',
    'BiasPoint',
    'CollectionLoopDesign',
    'DendriticTree',
    'DrLoopSpec',
    'NoCollectionDesign',
    'PropagationResult',
    'ResponseCurve',
    'ResponseLookup',
    'SquidParams',
    'SynapseState',
    'TreeGeometry',
    'TreeTopology',
    'applied_flux_collection',
    'build_tree',
    'crosstalk_current',
    'design_ldi2_collection',
    'design_no_collection',
    'find_threshold_flux',
    'min_active_synapses',
    'point_activity_fraction',
    'propagate_binary',
    'propagate_dynamical',
    'sfq_coupling',
    'simulate_rfq',
    'size_squid',
    'sweep_response',
    'synapse_flux_quota',
    'threshold_fraction_circuit',
    'total_unit_fraction',
    'tree_activity_fraction',
    'tree_geometry',
    'vary_ic_no_collection',
]
