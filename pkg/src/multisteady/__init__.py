"""Multi-agent steady-state strategy synthesis on Markov decision processes."""

from .chain import (
    FrequencyVector,
    MrStrategy,
    Profile,
    alt_dist,
    cropped_linf,
    dist,
    evaluate_full_profile,
    evaluate_irreducible_profile,
    induced_chain,
    invariant_distribution,
)
from .decompose import (
    CyclicStructure,
    MecDecomposition,
    NormalForm,
    check_well_formed,
    mec_decompose,
    normal_form,
    period_and_classes,
)
from .model import Coloring, Mdp, Objective, augment_memory, validate
from .oracle import product_chain_frequencies
from .synthesis import SynthesisReport, agents_needed, baseline_synthesize, incremental_synthesize

__version__ = "0.1.0"

__all__ = [
    "Coloring",
    "CyclicStructure",
    "FrequencyVector",
    "Mdp",
    "MecDecomposition",
    "MrStrategy",
    "NormalForm",
    "Objective",
    "Profile",
    "SynthesisReport",
    "agents_needed",
    "alt_dist",
    "augment_memory",
    "baseline_synthesize",
    "check_well_formed",
    "cropped_linf",
    "dist",
    "evaluate_full_profile",
    "evaluate_irreducible_profile",
    "incremental_synthesize",
    "induced_chain",
    "invariant_distribution",
    "mec_decompose",
    "normal_form",
    "period_and_classes",
    "product_chain_frequencies",
    "validate",
]
