"""Toy e+e- jet events, jet-clustering QUBOs, decoding and the ee-kt baseline."""

from .cluster import (
    UNASSIGNED,
    Jet,
    JetAssignment,
    build_jets,
    decode_jets,
    dijet_assignment,
    eekt_cluster,
    invariant_mass,
    jet_efficiency,
    kt_distance,
    mass_histogram,
)
from .event import (
    Constituent,
    JetEvent,
    generate_jet_event,
    load_constituents_csv,
    save_constituents_csv,
)
from .qubo import (
    angle_qubo,
    auto_multijet_lambda,
    durham_matrix,
    multijet_qubo,
    thrust_axis_scan,
    thrust_from_selection,
    thrust_qubo,
    tight_multijet_lambda,
)
