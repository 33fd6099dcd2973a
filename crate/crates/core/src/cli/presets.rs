//! Built-in configurations: the reference figures and the acceptance
//! experiments. The figure presets start the chain in state 1.

use super::config::RunFile;
use super::CliError;

const REFERENCE_CHAIN: &str = r#"
[chain]
q = [[-5.0, 1.0, 5.0], [2.0, -2.0, 5.0], [3.0, 1.0, -10.0]]
convention = "column"
"#;

const FIG1: &str = r#"
seed = 1

[process]
n = 1000
lambda = [0.1, 1.0, 3.0]
horizon = 3.0
initial = 1

[sweep]
parameter = "speed"
values = [1.0, 10.0]
"#;

const FIG2: &str = r#"
seed = 1

[process]
n = 1000
lambda = [0.1, 1.0, 3.0]
horizon = 3.0
initial = 1

[sweep]
parameter = "speed"
values = [100.0, 10000.0]
"#;

const FIG_CLT: &str = r#"
seed = 1

[process]
n = 10
lambda = [0.1, 1.0, 3.0]
beta = 1.0
horizon = 10.0
initial = 1

[experiment]
regime = "joint_beta"
replicates = 100
grid = { start = 0.0, end = 10.0, points = 101 }
paths = 100

[sweep]
parameter = "n"
"#;

const ACCEPT_JOINT: &str = r#"
seed = 1

[process]
n = 2000
lambda = [0.1, 1.0, 3.0]
beta = 1.0
horizon = 3.0

[experiment]
regime = "joint_beta"
replicates = 2000
grid = [0.5, 1.0, 2.0, 3.0]
"#;

const ACCEPT_ITERATED: &str = r#"
seed = 1

[process]
n = 1000
lambda = [0.1, 1.0, 3.0]
speed = 10000.0
horizon = 3.0

[experiment]
regime = "iterated_n_then_alpha"
replicates = 2000
grid = [1.0, 3.0]
centering = "pathwise"
tolerance = { rel_tol = 0.1 }
"#;

const ACCEPT_BETA_HALF: &str = r#"
seed = 1

[process]
n = 10000
lambda = [0.1, 1.0, 3.0]
beta = 0.5
horizon = 2.0

[experiment]
regime = "joint_beta"
replicates = 1000
grid = [1.0, 2.0]
tolerance = { rel_tol = 0.15 }
"#;

const ACCEPT_BETA_TWO: &str = r#"
seed = 1

[process]
n = 10000
lambda = [0.1, 1.0, 3.0]
beta = 2.0
horizon = 2.0

[experiment]
regime = "joint_beta"
replicates = 1000
grid = [1.0, 2.0]
tolerance = { rel_tol = 0.15 }
"#;

const ACCEPT_GAMMA: &str = r#"
seed = 1

[process]
n = 10000
lambda = [0.1, 1.0, 3.0]
beta = 1.0
gamma = 0.5
horizon = 3.0

[experiment]
regime = "gamma"
replicates = 2000
grid = [1.0, 3.0]
centering = "pathwise"
tolerance = { rel_tol = 0.1 }
"#;

const ACCEPT_RECOVERY: &str = r#"
seed = 1

[chain]
q = [[0.0]]

[process]
n = 5000
lambda = [1.0]
mu = [0.5]
horizon = 3.0

[experiment]
regime = "recovery_non_modulated"
replicates = 2000
grid = [1.0, 3.0]
tolerance = { rel_tol = 0.1 }
"#;

pub const PRESET_NAMES: &[&str] = &[
    "fig1",
    "fig2",
    "fig3",
    "fig4",
    "fig34",
    "accept-joint",
    "accept-iterated",
    "accept-beta-half",
    "accept-beta-two",
    "accept-gamma",
    "accept-recovery",
];

fn with_sweep(body: &str, values: &str) -> String {
    body.replace(
        "parameter = \"n\"\n",
        &format!("parameter = \"n\"\nvalues = {values}\n"),
    )
}

/// TOML source of a preset.
pub fn preset_source(name: &str) -> Option<String> {
    let body = match name {
        "fig1" => FIG1.to_string(),
        "fig2" => FIG2.to_string(),
        "fig3" => with_sweep(FIG_CLT, "[10.0, 100.0]"),
        "fig4" => with_sweep(FIG_CLT, "[1000.0, 10000.0]"),
        "fig34" => with_sweep(FIG_CLT, "[10.0, 100.0, 1000.0, 10000.0]"),
        "accept-joint" => ACCEPT_JOINT.to_string(),
        "accept-iterated" => ACCEPT_ITERATED.to_string(),
        "accept-beta-half" => ACCEPT_BETA_HALF.to_string(),
        "accept-beta-two" => ACCEPT_BETA_TWO.to_string(),
        "accept-gamma" => ACCEPT_GAMMA.to_string(),
        "accept-recovery" => ACCEPT_RECOVERY.to_string(),
        _ => return None,
    };
    if body.contains("[chain]") {
        Some(body)
    } else {
        Some(format!("{body}{REFERENCE_CHAIN}"))
    }
}

pub fn preset(name: &str) -> Result<RunFile, CliError> {
    let src = preset_source(name).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown preset {name:?}; available: {}",
            PRESET_NAMES.join(", ")
        ))
    })?;
    RunFile::from_toml_str(&src)
}
