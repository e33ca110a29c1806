use proptest::prelude::*;
use sphereflow::config::parse_config;
use sphereflow::scenarios::SCENARIO_NAMES;

const NORMALIZATIONS: [&str; 3] = ["normalized_pde", "rescale_each_step", "unnormalized"];

fn custom(n: usize, k: usize, p: f64, phi: usize, eps: f64, initial: usize, a: f64, c: f64) -> String {
    let phi = match phi {
        0 => "phi = \"constant\"".to_string(),
        1 => format!("phi = \"sin2_power\"\nphi_eps = {eps:?}"),
        _ => format!("phi = \"tilted\"\nphi_delta = {:?}", eps * 0.5),
    };
    let initial = match initial {
        0 => format!("initial = \"sphere\"\ninitial_radius = {a:?}"),
        _ => format!("initial = \"spheroid\"\ninitial_a = {a:?}\ninitial_c = {c:?}"),
    };
    format!("[scenario]\nname = \"custom\"\nn = {n}\nk = {k}\np = {p:?}\n{phi}\n{initial}\n")
}

proptest! {
    #[test]
    fn preset_configs_round_trip(
        name in 0..SCENARIO_NAMES.len(),
        np in 8usize..200,
        cfl in 0.01f64..0.5,
        t_max in 0.1f64..1e4,
        norm in 0..3usize,
        projection in any::<bool>(),
        stride in 1usize..500,
    ) {
        let text = format!(
            "[scenario]\nname = \"{}\"\n[grid]\nnum_points = {}\n[engine]\ncfl = {cfl:?}\nt_max = {t_max:?}\n\
             normalization = \"{}\"\nprojection = {projection}\nsample_stride = {stride}\n[output]\ndir = \"runs/x y\"\n",
            SCENARIO_NAMES[name], 2 * np, NORMALIZATIONS[norm]
        );
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(parse_config(&cfg.emit()).unwrap(), cfg);
    }

    #[test]
    fn custom_configs_round_trip(
        n in 2usize..7,
        kk in 0usize..6,
        p in 0.5f64..6.0,
        phi in 0..3usize,
        eps in 0.01f64..0.4,
        initial in 0..2usize,
        a in 0.5f64..2.0,
        c in 0.5f64..2.0,
    ) {
        // the tilted family is only valid for k = n
        let k = if phi == 2 { n } else { 1 + kk % n };
        let cfg = parse_config(&custom(n, k, p, phi, eps, initial, a, c)).unwrap();
        prop_assert_eq!(parse_config(&cfg.emit()).unwrap(), cfg);
    }
}
