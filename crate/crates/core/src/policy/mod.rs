//! Stochastic decision rules `pi(a | x)`, the utility/balance objective and
//! its gradient, and the Bayesian and marginal trainers.

mod objective;
mod repr;
mod simplex;
mod train;
mod utility;

pub use objective::{expected_utility, finite_difference_gradient, gradient, objective_value, PreparedModel};
pub use repr::{Parameterization, Policy};
pub use simplex::project_to_simplex;
pub use train::{bayes_optimal_rule, train, train_bayes, train_marginal, train_with_observer, Method, TrainConfig};
pub use utility::UtilityTable;
