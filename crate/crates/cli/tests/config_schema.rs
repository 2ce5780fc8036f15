use torus_psido_cli::config::{FunctionConfig, RunConfig, SymbolConfig};
use torus_psido_cli::error::CliError;

const BASE: &str = r#"
seed = 7

[grid]
n = 1
N = 16

[symbol]
family = "perturbed_elliptic"
m = 2.0
rho = 0.5
eps0 = 0.25

[function]
tag = "power"
params = { z = -0.5 }
"#;

#[test]
fn toml_parses_with_defaults() {
    let c = RunConfig::from_toml(BASE).unwrap();
    assert_eq!(c.seed, 7);
    assert_eq!(c.grid.size, 16);
    assert_eq!(c.symbol, SymbolConfig::PerturbedElliptic { m: 2.0, rho: 0.5, delta: 0.0, eps0: 0.25 });
    assert_eq!(c.expansion.k, 2);
    assert_eq!(c.tolerances.cross_method, 1e-6);
}

#[test]
fn json_is_equivalent() {
    let t = RunConfig::from_toml(BASE).unwrap();
    let j = RunConfig::from_json(&serde_json::to_string(&t).unwrap()).unwrap();
    assert_eq!(t, j);
    let j2 = RunConfig::from_json(
        r#"{"seed": 7, "grid": {"n": 1, "N": 16},
            "symbol": {"family": "perturbed_elliptic", "m": 2.0, "rho": 0.5, "eps0": 0.25},
            "function": {"tag": "power", "params": {"z": -0.5}}}"#,
    )
    .unwrap();
    assert_eq!(t, j2);
}

#[test]
fn unknown_key_is_a_schema_error() {
    let bad = BASE.replace("seed = 7", "seed = 7\nsed = 3");
    assert!(matches!(RunConfig::from_toml(&bad), Err(CliError::Schema(_))));
    let bad = BASE.replace("N = 16", "N = 16\nsize = 3");
    assert!(matches!(RunConfig::from_toml(&bad), Err(CliError::Schema(_))));
}

#[test]
fn missing_family_is_a_schema_error() {
    let bad = BASE.replace("family = \"perturbed_elliptic\"\n", "");
    assert!(matches!(RunConfig::from_toml(&bad), Err(CliError::Schema(_))));
}

#[test]
fn out_of_range_values_name_the_field() {
    let field = |s: &str| match RunConfig::from_toml(s) {
        Err(CliError::Config { field, .. }) => field,
        other => panic!("expected a field error, got {other:?}"),
    };
    assert!(matches!(RunConfig::from_toml(&BASE.replace("eps0 = 0.25", "eps0 = 0.5")), Err(CliError::Config { .. })));
    assert_eq!(field(&BASE.replace("N = 16", "N = 15")), "grid");
    assert_eq!(field(&format!("{BASE}\n[expansion]\nK = 1\nJ = 1\ngrade = 2\n")), "expansion.grade");
    assert_eq!(field(&format!("{BASE}\n[sweep]\nt = [0.1, 2.0]\n")), "sweep.t");
    assert_eq!(field(&BASE.replace("z = -0.5", "z = -0.5, w = 1")), "function.params.w");
}

#[test]
fn function_flag_syntax() {
    let f = FunctionConfig::parse_flag("power:z=-0.5,z_im=0.25").unwrap();
    assert_eq!(f.tag, "power");
    let r = FunctionConfig::parse_flag("rational:num=1;2,den=1;0;1").unwrap();
    assert!(r.holo().is_ok());
    assert!(FunctionConfig::parse_flag("exp").is_ok());
    assert!(FunctionConfig::parse_flag("power").is_err());
    assert!(FunctionConfig::parse_flag("sinh:t=1").is_err());
    assert!(FunctionConfig::parse_flag("exp:t").is_err());
}
