use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn scatterkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scatterkit"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("scatterkit-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Data rows (everything that is neither a comment nor the header).
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let base = ["eval", "--alpha-x", "0.4", "--spp", "3000", "--theta-o-steps", "4", "--seed", "9"];
    let one = scatterkit(&[&["--threads", "1"], &base[..]].concat());
    let three = scatterkit(&[&["--threads", "3"], &base[..]].concat());
    assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn csv_starts_with_a_replayable_command_line() {
    let o = scatterkit(&["furnace", "--alpha-x", "0.3", "--theta-i", "10", "--samples", "2000", "--seed", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let first = lines.next().unwrap();
    assert_eq!(lines.next().unwrap(), "theta_i,alpha_x,alpha_y,albedo,std_err");
    let replay: Vec<&str> = first.strip_prefix("# scatterkit ").unwrap().split(' ').collect();
    assert!(replay.contains(&"--samples"));
    assert_eq!(stdout(&scatterkit(&replay)), text);
}

#[test]
fn exit_codes() {
    assert_eq!(scatterkit(&["eval", "--alpha-x", "rough"]).status.code(), Some(2));
    assert_eq!(scatterkit(&["eval", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(scatterkit(&["furnace", "--alpha-x", "-1"]).status.code(), Some(2));
    let undefined = scatterkit(&["smask", "--kind", "trr", "--lambdas", "-1.5,-1.2,0.4,0.8"]);
    assert_eq!(undefined.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&undefined.stderr).contains("branch"));
    assert_eq!(scatterkit(&["--help"]).status.code(), Some(0));
    let missing = scratch("missing-dir").join("nope").join("out.csv");
    let io = scatterkit(&["--out", missing.to_str().unwrap(), "beta", "--order", "1", "--a", "2", "--b", "3"]);
    assert_eq!(io.status.code(), Some(1));
}

#[test]
fn numeric_errors_map_to_exit_three() {
    use scatterkit::Error;
    let numeric = anyhow::Error::from(Error::NotConverged { terms: 10, last_term: 1.0 });
    assert_eq!(scatterkit_cli::exit_code(&numeric), 3);
    let input = anyhow::Error::from(Error::InvalidArgument("x".into()));
    assert_eq!(scatterkit_cli::exit_code(&input), 2);
    let usage = anyhow::Error::from(scatterkit_cli::UsageError("x".into()));
    assert_eq!(scatterkit_cli::exit_code(&usage), 2);
    assert_eq!(scatterkit_cli::exit_code(&anyhow::anyhow!("disk full")), 1);
}

#[test]
fn beta_agrees_with_known_value() {
    let o = scatterkit(&["beta", "--order", "1", "--a", "2", "--b", "3"]);
    let r = rows(&stdout(&o));
    let v: f64 = r[0][0].parse().unwrap();
    assert!((v - 1.0 / 12.0).abs() < 1e-14);
}

#[test]
fn wet_eval_reads_a_params_file() {
    let params = scratch("sand.params");
    fs::write(
        &params,
        "thickness = 1.5\nporosity = 0.6\nsaturation = 0.4\ndensity = 8\nsigma_l = 0.1, 0.3, 0.6\neta_l = 1.33\n\
         particle.0.sphericity = 0.8\nparticle.0.roughness = 0.3\nparticle.0.eta_p = 1.5\nparticle.0.albedo = 0.9\n\
         particle.0.fit = 0.7, 0.3, 0.4, 0.3, 2.6, 0.5\n",
    )
    .unwrap();
    let o = scatterkit(&["wet-eval", "--params", params.to_str().unwrap(), "--grid", "3", "--spp", "500"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    // Three reflection and three transmission angles, three channels each.
    assert_eq!(r.len(), 18);
    for row in &r {
        let theta: f64 = row[0].parse().unwrap();
        let total: f64 = row[6].parse().unwrap();
        assert!(theta > 0.0 && theta < 180.0 && theta != 90.0);
        assert!(total.is_finite() && total >= 0.0);
    }

    fs::write(&params, "thickness = 1\ncolour = red\n").unwrap();
    let bad = scatterkit(&["wet-eval", "--params", params.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn fitted_phase_feeds_the_oracle() {
    let fit = scratch("fit.csv");
    let f = scatterkit(&[
        "--out",
        fit.to_str().unwrap(),
        "fit-phase",
        "--psi",
        "0.8",
        "--rough",
        "0.3",
        "--samples",
        "100000",
        "--bins",
        "60",
    ]);
    assert!(f.status.success(), "{}", String::from_utf8_lossy(&f.stderr));
    let o = scatterkit(&[
        "wet-oracle",
        "--thickness",
        "inf",
        "--porosity",
        "0.6",
        "--saturation",
        "0",
        "--n",
        "8",
        "--albedo",
        "0.9",
        "--phase",
        fit.to_str().unwrap(),
        "--grid",
        "2",
        "--spp",
        "2000",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 6);
    for row in &r {
        let refl: f64 = row[2].parse().unwrap();
        let trans: f64 = row[3].parse().unwrap();
        assert!(refl > 0.0);
        assert_eq!(trans, 0.0, "half space transmits nothing");
    }
}

#[test]
fn accept_lists_criteria() {
    let o = scatterkit(&["accept", "--list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["equivalence", "energy-conservation", "wet-full-bsdf", "limits"] {
        assert!(text.contains(name), "{text}");
    }
    assert_eq!(scatterkit(&["accept", "--only", "no-such"]).status.code(), Some(2));
}

#[test]
fn accept_runs_a_selected_criterion() {
    let o = scatterkit(&["accept", "--only", "limits"]);
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("PASS") && l.contains("limits")), "{text}");
    assert_eq!(o.status.code(), Some(0));
}
