"""Value of terminal-distribution information in discrete market models."""

from .errors import (
    AdmissibilityError,
    ConfigError,
    ConvergenceError,
    DomainError,
)
from .markets import (
    BinomialParams,
    CompleteMarket,
    NoArbitrageReport,
    TrinomialParams,
    build_binomial_lattice,
    build_trinomial_lattice,
    validate_no_arbitrage,
)
from .measures import (
    Anticipation,
    BinomialMeasureTree,
    RadonNikodym,
    binomial_transition_formula,
    minimal_measure,
    radon_nikodym,
    risk_neutral_binomial,
    verify_minimality,
)
from .utility import Utility
from .complete import (
    CompleteSolution,
    ValueTriple,
    anticipation_presets,
    closed_form_lambda,
    optimal_terminal_wealth,
    optimal_wealth_process,
    replicate_portfolio,
    simulate_strategy,
    single_period_closed_form,
    solve,
    solve_complete_market,
    solve_lambda,
    sweep,
    value_of_information,
)
from .trinomial import (
    ExtremalPair,
    ProductMeasureSet,
    TrinomialSolution,
    budget_residuals,
    extremal_measures,
    interior_measure,
    lift_terminal_anticipation,
    optimal_terminal_wealth_trinomial,
    product_measures,
    product_path_anticipation,
    simulate_trinomial_strategy,
    solve_lambda_system,
    trinomial_wealth_and_delta,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "Anticipation",
    "BinomialMeasureTree",
    "BinomialParams",
    "CompleteMarket",
    "CompleteSolution",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "ExtremalPair",
    "NoArbitrageReport",
    "ProductMeasureSet",
    "RadonNikodym",
    "TrinomialParams",
    "TrinomialSolution",
    "Utility",
    "ValueTriple",
    "anticipation_presets",
    "binomial_transition_formula",
    "budget_residuals",
    "build_binomial_lattice",
    "build_trinomial_lattice",
    "closed_form_lambda",
    "extremal_measures",
    "interior_measure",
    "lift_terminal_anticipation",
    "minimal_measure",
    "optimal_terminal_wealth",
    "optimal_terminal_wealth_trinomial",
    "optimal_wealth_process",
    "product_measures",
    "product_path_anticipation",
    "radon_nikodym",
    "replicate_portfolio",
    "risk_neutral_binomial",
    "simulate_strategy",
    "simulate_trinomial_strategy",
    "single_period_closed_form",
    "solve",
    "solve_complete_market",
    "solve_lambda",
    "solve_lambda_system",
    "sweep",
    "trinomial_wealth_and_delta",
    "validate_no_arbitrage",
    "value_of_information",
    "verify_minimality",
]
