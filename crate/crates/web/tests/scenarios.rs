use unmix_web::{rank_scenario, unmix_scenario, Scenario};

fn scenario(noise: f64) -> Scenario {
    Scenario {
        n_genes: 600,
        markers: 5,
        p1: 0.75,
        p2: 0.25,
        noise,
        seed: 3,
    }
}

#[test]
fn noise_free_deconvolution_is_exact() {
    let v = unmix_scenario(scenario(0.0), 0.0).unwrap();
    assert!(v["e1"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["estimated_mixing"], v["true_mixing"]);
    let svg = v["svg"].as_str().unwrap();
    assert!(svg.starts_with("<svg") && svg.matches("<line").count() == 2);
}

#[test]
fn noisy_deconvolution_stays_close() {
    let v = unmix_scenario(scenario(0.1), 0.33).unwrap();
    assert!(v["e1"].as_f64().unwrap() < 0.5);
    for r in v["pearson"].as_array().unwrap() {
        assert!(r.as_f64().unwrap() > 0.9);
    }
}

#[test]
fn invalid_proportions_are_reported() {
    let s = Scenario {
        p1: 0.5,
        p2: 0.5,
        ..scenario(0.0)
    };
    assert!(unmix_scenario(s, 0.01).is_err());
}

#[test]
fn ranking_is_perfect_without_noise() {
    let v = rank_scenario(scenario(0.0), 2.0, 10).unwrap();
    assert_eq!(v["auc"], 1.0);
    assert_eq!(v["top"].as_array().unwrap().len(), 10);
    assert!(v["de_genes"].as_u64().unwrap() > 0);
}
