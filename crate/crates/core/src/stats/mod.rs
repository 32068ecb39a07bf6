//! Correlation tables, trend regression and the distribution functions they use.

mod correlation;
mod ols;
pub mod special;
mod tables;

pub use correlation::{
    correlation_p, mid_ranks, pearson, spearman, spearman_complete, spearman_permutation,
    Correlation,
};
pub use ols::{
    dummy_term, interaction_term, mean_slope_test, ols, ols_trend, player_slopes, Coefficient,
    MeanSlopeTest, OlsFit, SlopeEstimate, TrendObservation, TrendResult,
};
pub use special::{
    f_cdf, f_sf, ln_gamma, regularized_incomplete_beta, student_t_cdf, student_t_two_sided,
};
pub use tables::{
    daily_hits_vs_ema, daily_hits_vs_features, ema_vs_season, format_p, match_day_hits,
    significant, sort_by_abs_rho, trend_observations, write_correlation_csv, CorrelationEntry,
    PValueMode,
};
