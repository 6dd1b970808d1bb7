"""Toy track finding: events, segments, segment QUBOs, decoding, metrics and vertexing."""

from .decode import TrackSet, decode_tracks, doublet_metrics, harmonic_mean, selected_pairs
from .io import load_hits_csv, save_hits_csv
from .qubo import (
    DpParams,
    DpStats,
    KdePrior,
    TripletQuboParams,
    doublet_features,
    dp_pair_terms,
    dp_qubo,
    triplet_pair_coefficient,
    triplet_qubo,
    triplet_relation,
)
from .segments import (
    Doublet,
    DoubletCuts,
    Triplet,
    TripletCuts,
    build_doublets,
    build_triplets,
    fit_circle,
    triplet_geometry,
)
from .toy import DetectorModel, Hit, ToyParticle, generate_toy_event, helix_center, truth_doublets, truth_tracks
from .vertex import (
    VertexProblemParams,
    best_permutation_accuracy,
    decode_vertices,
    distortion,
    generate_vertex_event,
    track_distance,
    vertex_qubo,
)
