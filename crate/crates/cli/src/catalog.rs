//! Bundled reproduction configs, embedded in the binary.

pub struct BundledConfig {
    pub name: &'static str,
    pub description: &'static str,
    pub json: &'static str,
}

pub const BUNDLED: &[BundledConfig] = &[
    BundledConfig {
        name: "loglaw-doubling",
        description: "hitting exponent of the doubling map at a generic target (expect slope ~ 1)",
        json: include_str!("../configs/loglaw-doubling.json"),
    },
    BundledConfig {
        name: "loglaw-slow-family",
        description: "slowly converging family: exponent ~ 2 vs dimension 1, comparison must FAIL",
        json: include_str!("../configs/loglaw-slow-family.json"),
    },
    BundledConfig {
        name: "loglaw-solenoid",
        description: "solenoid attractor: exponent matches local dimension at cloud-drawn targets",
        json: include_str!("../configs/loglaw-solenoid.json"),
    },
    BundledConfig {
        name: "meanfield-loglaw",
        description: "coupled-system single coordinate at delta = 0.05 (expect slope ~ 1)",
        json: include_str!("../configs/meanfield-loglaw.json"),
    },
    BundledConfig {
        name: "meanfield-fixed-point",
        description: "self-consistent fixed point for delta in {0, 0.02, 0.05} plus decay probe",
        json: include_str!("../configs/meanfield-fixed-point.json"),
    },
    BundledConfig {
        name: "converge-doubling",
        description: "W-distance convergence to equilibrium from 1 + cos(2 pi x)",
        json: include_str!("../configs/converge-doubling.json"),
    },
    BundledConfig {
        name: "lossmem-doubling",
        description: "exponential loss of memory of a zero-mean density (doubling map)",
        json: include_str!("../configs/lossmem-doubling.json"),
    },
    BundledConfig {
        name: "lossmem-alternating",
        description: "loss of memory under the alternating degree-2/degree-3 family",
        json: include_str!("../configs/lossmem-alternating.json"),
    },
    BundledConfig {
        name: "borel-cantelli",
        description: "Borel-Cantelli ratio Z_n / E(Z_n) with shrinking-target bumps",
        json: include_str!("../configs/borel-cantelli.json"),
    },
    BundledConfig {
        name: "verify-assumptions",
        description: "contraction, derivative and decay checks for the default solenoid family",
        json: include_str!("../configs/verify-assumptions.json"),
    },
];

pub fn find(name: &str) -> Option<&'static BundledConfig> {
    BUNDLED.iter().find(|c| c.name == name)
}
