//! The canonical feature schema. Order matters: collinearity pruning keeps
//! the earlier of two correlated features.

pub const STEPS_TOTAL: &str = "steps_total";
pub const DISTANCE_TOTAL: &str = "distance_total";
pub const CALORIES_TOTAL: &str = "calories_total";
pub const TOTAL_SEDENTARY_TIME: &str = "total_sedentary_time";
pub const LEVEL1_MINUTES: &str = "level1_minutes";
pub const LEVEL2_MINUTES: &str = "level2_minutes";
pub const SEDENTARY_BOUT_COUNT: &str = "sedentary_bout_count";
pub const SEDENTARY_BOUT_MEAN: &str = "sedentary_bout_mean";
pub const SEDENTARY_BOUT_STD: &str = "sedentary_bout_std";
pub const SEDENTARY_BREAK_TOTAL: &str = "sedentary_break_total";
pub const SEDENTARY_BREAK_MEAN: &str = "sedentary_break_mean";
pub const SEDENTARY_BREAK_STD: &str = "sedentary_break_std";

pub const DEEP_SLEEP_MINUTES: &str = "deep_sleep_minutes";
pub const LIGHT_SLEEP_MINUTES: &str = "light_sleep_minutes";
pub const REM_SLEEP_MINUTES: &str = "rem_sleep_minutes";
pub const WAKE_MINUTES: &str = "wake_minutes";
pub const TOTAL_SLEEP_TIME: &str = "total_sleep_time";
pub const TIME_IN_BED: &str = "time_in_bed";
pub const SLEEP_EFFICIENCY: &str = "sleep_efficiency";
pub const SLEEP_HURST: &str = "sleep_hurst";

pub const HR_MEAN: &str = "hr_mean";
pub const HR_STD: &str = "hr_std";
pub const HR_MIN: &str = "hr_min";
pub const HR_MAX: &str = "hr_max";
pub const HR_MEDIAN: &str = "hr_median";
pub const HR_SKEWNESS: &str = "hr_skewness";
pub const HR_KURTOSIS: &str = "hr_kurtosis";
pub const HR_HURST: &str = "hr_hurst";
pub const HR_INERTIA: &str = "hr_inertia";
pub const HR_LOCAL_HOMOGENEITY: &str = "hr_local_homogeneity";
pub const HR_CORRELATION: &str = "hr_correlation";
pub const HR_ENERGY: &str = "hr_energy";
pub const HR_SAMPLE_ENTROPY: &str = "hr_sample_entropy";
pub const HR_APPROXIMATE_ENTROPY: &str = "hr_approximate_entropy";
pub const HRV: &str = "hrv";
pub const RHR: &str = "rhr";
pub const HRV_CHANGE: &str = "hrv_change";
pub const RHR_CHANGE: &str = "rhr_change";

pub const SPO2_MEAN: &str = "spo2_mean";
pub const SPO2_STD: &str = "spo2_std";
pub const SPO2_MIN: &str = "spo2_min";
pub const SPO2_MAX: &str = "spo2_max";
pub const SPO2_MEDIAN: &str = "spo2_median";
pub const SPO2_SKEWNESS: &str = "spo2_skewness";
pub const SPO2_KURTOSIS: &str = "spo2_kurtosis";
pub const SPO2_HURST: &str = "spo2_hurst";
pub const BREATHING_RATE: &str = "breathing_rate";
pub const VO2MAX: &str = "vo2max";

pub const DFA_SLEEP: [&str; 6] = [
    "dfa_sleep_10",
    "dfa_sleep_20",
    "dfa_sleep_30",
    "dfa_sleep_40",
    "dfa_sleep_50",
    "dfa_sleep_60",
];
pub const DFA_HR: [&str; 6] = [
    "dfa_hr_10",
    "dfa_hr_20",
    "dfa_hr_30",
    "dfa_hr_40",
    "dfa_hr_50",
    "dfa_hr_60",
];
pub const DFA_SPO2: [&str; 6] = [
    "dfa_spo2_10",
    "dfa_spo2_20",
    "dfa_spo2_30",
    "dfa_spo2_40",
    "dfa_spo2_50",
    "dfa_spo2_60",
];

pub const MOVEMENT: [&str; 12] = [
    STEPS_TOTAL,
    DISTANCE_TOTAL,
    CALORIES_TOTAL,
    TOTAL_SEDENTARY_TIME,
    LEVEL1_MINUTES,
    LEVEL2_MINUTES,
    SEDENTARY_BOUT_COUNT,
    SEDENTARY_BOUT_MEAN,
    SEDENTARY_BOUT_STD,
    SEDENTARY_BREAK_TOTAL,
    SEDENTARY_BREAK_MEAN,
    SEDENTARY_BREAK_STD,
];

/// Every feature, in canonical order.
pub fn feature_names() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = Vec::with_capacity(66);
    // daily summaries lead so they survive collinearity pruning
    names.extend([HRV, RHR, HRV_CHANGE, RHR_CHANGE]);
    names.extend([HR_MEAN, HR_STD, HR_MIN, HR_MAX, HR_MEDIAN, HR_SKEWNESS, HR_KURTOSIS]);
    names.extend(DFA_HR);
    names.extend([
        HR_HURST,
        HR_INERTIA,
        HR_LOCAL_HOMOGENEITY,
        HR_CORRELATION,
        HR_ENERGY,
        HR_SAMPLE_ENTROPY,
        HR_APPROXIMATE_ENTROPY,
    ]);
    names.extend([BREATHING_RATE, VO2MAX]);
    names.extend([
        SPO2_MEAN,
        SPO2_STD,
        SPO2_MIN,
        SPO2_MAX,
        SPO2_MEDIAN,
        SPO2_SKEWNESS,
        SPO2_KURTOSIS,
    ]);
    names.extend(DFA_SPO2);
    names.push(SPO2_HURST);
    names.extend(MOVEMENT);
    names.extend([
        DEEP_SLEEP_MINUTES,
        LIGHT_SLEEP_MINUTES,
        REM_SLEEP_MINUTES,
        WAKE_MINUTES,
        TOTAL_SLEEP_TIME,
        TIME_IN_BED,
        SLEEP_EFFICIENCY,
    ]);
    names.extend(DFA_SLEEP);
    names.push(SLEEP_HURST);
    names
}

/// Display names used in report tables.
pub fn display_name(feature: &str) -> String {
    let fixed = match feature {
        HRV => "HRV",
        RHR => "RHR",
        HRV_CHANGE => "HRV Change",
        RHR_CHANGE => "RHR Change",
        BREATHING_RATE => "Breathing Rate",
        VO2MAX => "VO2max",
        TOTAL_SEDENTARY_TIME => "Total Sedentary Time",
        SEDENTARY_BREAK_TOTAL => "Sedentary Break Total",
        SEDENTARY_BREAK_STD => "Sedentary Break Std.",
        SEDENTARY_BREAK_MEAN => "Sedentary Break Mean",
        SEDENTARY_BOUT_STD => "Sedentary Bout Std.",
        SEDENTARY_BOUT_MEAN => "Sedentary Bout Mean",
        SEDENTARY_BOUT_COUNT => "Sedentary Bout Count",
        HR_SKEWNESS => "HR Skewness",
        HR_MIN => "Heart Rate Min.",
        HR_MEDIAN => "Heart Rate Median",
        SLEEP_EFFICIENCY => "Sleep Efficiency",
        LIGHT_SLEEP_MINUTES => "Light Sleep Duration",
        SPO2_SKEWNESS => "SpO2 Skewness",
        SPO2_HURST => "SpO2 Hurst Exp.",
        SPO2_STD => "SpO2 Std.",
        SPO2_MIN => "SpO2 Min.",
        _ => "",
    };
    if !fixed.is_empty() {
        return fixed.to_string();
    }
    if let Some(n) = feature.strip_prefix("dfa_spo2_") {
        return format!("SpO2-DFA-{n}");
    }
    if let Some(n) = feature.strip_prefix("dfa_sleep_") {
        return format!("DFA-Sleep-{n}");
    }
    if let Some(n) = feature.strip_prefix("dfa_hr_") {
        return format!("HR-DFA-{n}");
    }
    feature.to_string()
}
