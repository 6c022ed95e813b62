// Generated by `cargo run --release -p vecm-core --example trace_moments -- 500000 1000 20240601`.
// (mean, variance) of the asymptotic trace statistic, index = common trends − 1.

pub const MAX_DIMS: usize = 12;
pub const MOMENT_REPLICATIONS: usize = 500000;
pub const MOMENT_STEPS: usize = 1000;
pub const MOMENT_SEED: u64 = 20240601;

pub static NONE: [(f64, f64); MAX_DIMS] = [
    (1.140071, 2.214578),
    (6.094390, 10.628786),
    (15.031695, 25.184473),
    (27.933932, 45.559215),
    (44.783782, 71.964661),
    (65.578978, 104.323533),
    (90.324695, 142.246721),
    (118.979260, 185.868056),
    (151.523906, 235.694610),
    (188.000791, 291.034708),
    (228.367263, 352.109389),
    (272.605348, 419.078417),
];

pub static RESTRICTED_CONSTANT: [(f64, f64); MAX_DIMS] = [
    (4.049108, 6.915690),
    (12.014461, 19.509497),
    (23.954521, 38.143436),
    (39.823244, 62.390947),
    (59.635530, 92.843524),
    (83.382798, 128.910766),
    (111.059110, 170.462696),
    (142.648380, 217.955985),
    (178.110991, 271.600630),
    (217.496334, 330.840977),
    (260.742924, 395.836359),
    (307.855423, 466.339103),
];

pub static UNRESTRICTED_CONSTANT: [(f64, f64); MAX_DIMS] = [
    (0.992804, 1.959535),
    (8.288083, 14.486297),
    (19.422405, 31.892426),
    (34.451336, 54.709889),
    (53.361860, 82.934860),
    (76.174159, 117.134962),
    (102.872240, 156.944238),
    (133.503687, 202.200892),
    (168.011857, 253.768659),
    (206.389508, 310.883900),
    (248.637668, 373.834140),
    (294.761551, 442.709539),
];
