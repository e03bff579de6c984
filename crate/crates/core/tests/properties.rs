use proptest::collection::vec;
use proptest::prelude::*;
use stfgacn::experiment::{voting_ensemble, EarlyStopping, MetricsReport};
use stfgacn::nn::{attention_pool, graph_convolve, gru_step, AttentionParams, GcnParams, Gru, GruParams, Tensor};
use stfgacn::scalar::softmax;
use stfgacn::sim::{
    add_awgn_linear, attitude_matrix, default_radar_layout, generate_segment, relative_coordinates, AircraftProfile,
    Attitude, SimConfig, Snr, TrajectoryState,
};

fn angle() -> impl Strategy<Value = f64> {
    -std::f64::consts::PI..std::f64::consts::PI
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    vec(vec(-2.0f64..2.0, cols), rows)
}

proptest! {
    #[test]
    fn rotation_is_orthonormal(yaw in angle(), pitch in angle(), roll in angle(),
                               d in vec(-1e5f64..1e5, 3), p in vec(-1e5f64..1e5, 3)) {
        let att = Attitude { yaw, pitch, roll };
        let r = attitude_matrix(&att);
        for i in 0..3 {
            for j in 0..3 {
                let rtr: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let eye = if i == j { 1.0 } else { 0.0 };
                prop_assert!((rtr - eye).abs() < 1e-12);
            }
        }
        let state = TrajectoryState { time: 0.0, position: [p[0], p[1], p[2]], attitude: att };
        let rel = relative_coordinates(&[d[0], d[1], d[2]], &state);
        let raw = ((d[0] - p[0]).powi(2) + (d[1] - p[1]).powi(2) + (d[2] - p[2]).powi(2)).sqrt();
        let got = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]).sqrt();
        prop_assert!((got - raw).abs() <= 1e-12 * raw.max(1.0));
    }

    #[test]
    fn injected_noise_hits_any_target(snr in -15.0f64..15.0, seed in any::<u64>(), signal in vec(0.01f64..100.0, 200)) {
        let noisy = add_awgn_linear(&signal, snr, seed);
        let p_sig = signal.iter().map(|v| v * v).sum::<f64>();
        let p_noise = noisy.iter().zip(&signal).map(|(y, x)| (y - x).powi(2)).sum::<f64>();
        prop_assert!((10.0 * (p_sig / p_noise).log10() - snr).abs() <= 0.5);
    }

    #[test]
    fn softmax_is_a_shift_invariant_distribution(u in vec(-30.0f64..30.0, 1..40), shift in -50.0f64..50.0) {
        let a = softmax(&u);
        let shifted: Vec<f64> = u.iter().map(|v| v + shift).collect();
        let b = softmax(&shifted);
        prop_assert!(a.iter().all(|&x| x >= 0.0));
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn attention_weights_form_a_distribution(h in 1usize..6, k in 1usize..30, seed in any::<u64>()) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rand::Rng::gen_range(&mut rng, -3.0..3.0)).collect() };
        let p = AttentionParams::new(draw(h), draw(1)[0]);
        let hs = Tensor::from_vec(&[k, h], draw(k * h)).unwrap();
        let (_, alpha) = attention_pool(&p, &hs).unwrap();
        prop_assert!(alpha.iter().all(|&a| a >= 0.0));
        prop_assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gru_stays_bounded_over_long_sequences(hidden in 1usize..8, seed in any::<u64>()) {
        let layer = Gru::new(1, hidden);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let values: Vec<f64> = (0..layer.param_len()).map(|_| rand::Rng::gen_range(&mut rng, -1.0..=1.0)).collect();
        let params = GruParams::from_values(1, hidden, values).unwrap();
        let mut h = vec![0.0; hidden];
        for t in 0..200 {
            let x = [rand::Rng::gen_range(&mut rng, 0.0..=1.0)];
            h = gru_step(&params, &x, &h).unwrap();
            prop_assert!(h.iter().all(|v| v.is_finite() && v.abs() <= 1.0), "step {}", t);
        }
    }

    #[test]
    fn graph_convolution_is_linear(a in matrix(4, 4), o1 in matrix(4, 3), o2 in matrix(4, 3), w in matrix(2, 3),
                                   alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let t = |m: &Vec<Vec<f64>>| Tensor::from_rows(m).unwrap();
        let p = GcnParams { weight: t(&w) };
        let a = t(&a);
        let mix: Vec<Vec<f64>> = o1.iter().zip(&o2)
            .map(|(r1, r2)| r1.iter().zip(r2).map(|(x, y)| alpha * x + beta * y).collect())
            .collect();
        let lhs = graph_convolve(&p, &a, &t(&mix)).unwrap();
        let (y1, y2) = (graph_convolve(&p, &a, &t(&o1)).unwrap(), graph_convolve(&p, &a, &t(&o2)).unwrap());
        for ((l, x), y) in lhs.data().iter().zip(y1.data()).zip(y2.data()) {
            prop_assert!((l - (alpha * x + beta * y)).abs() < 1e-10);
        }
    }

    #[test]
    fn metric_identities(pairs in vec((0u8..2, 0u8..2), 1..200)) {
        let (pred, truth): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let m = MetricsReport::from_predictions(&pred, &truth).unwrap();
        prop_assert_eq!(m.tp + m.tn + m.fp + m.fn_, pred.len());
        prop_assert!((m.accuracy - (m.tp + m.tn) as f64 / pred.len() as f64).abs() < 1e-15);
        if m.precision > 0.0 && m.recall > 0.0 {
            let (lo, hi) = (m.precision.min(m.recall), m.precision.max(m.recall));
            prop_assert!(m.f1 >= lo - 1e-15 && m.f1 <= hi + 1e-15);
        }
    }

    #[test]
    fn voting_ignores_order(mut votes in vec(0u8..2, 1..15), seed in any::<u64>()) {
        let before = voting_ensemble(&votes);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(votes.as_mut_slice(), &mut rng);
        prop_assert_eq!(voting_ensemble(&votes), before);
    }

    #[test]
    fn early_stopping_keeps_the_best(losses in vec(0.0f64..10.0, 1..60), patience in 1usize..12) {
        let mut stop = EarlyStopping::new(patience);
        let mut seen = Vec::new();
        for (i, &l) in losses.iter().enumerate() {
            seen.push(l);
            let (_, halt) = stop.observe(i + 1, l);
            prop_assert!(seen.iter().all(|&s| stop.best <= s));
            prop_assert_eq!(seen[stop.best_epoch - 1], stop.best);
            if halt {
                prop_assert_eq!(i + 1 - stop.best_epoch, patience);
                break;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn segments_are_pure_functions_of_their_seeds(traj in 0u64..1000, los in any::<u64>(), snr in -15i32..15) {
        let cfg = SimConfig::default();
        let radar = &default_radar_layout()[0];
        let p = AircraftProfile::type2();
        let make = || generate_segment(radar, &p, traj, &cfg.los_noise(los), Snr::Db(snr as f64), &cfg);
        match (make(), make()) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "nondeterministic failure"),
        }
    }

    #[test]
    fn single_precision_tracks_double(hidden in 1usize..6, seed in any::<u64>()) {
        let layer = Gru::new(1, hidden);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let values: Vec<f64> = (0..layer.param_len()).map(|_| rand::Rng::gen_range(&mut rng, -1.0..=1.0)).collect();
        let p64 = GruParams::from_values(1, hidden, values.clone()).unwrap();
        let p32 = GruParams::from_values(1, hidden, values.iter().map(|&v| v as f32).collect()).unwrap();
        let (mut h64, mut h32) = (vec![0.0f64; hidden], vec![0.0f32; hidden]);
        for t in 0..50 {
            let x = (t as f64 * 0.37).sin().abs();
            h64 = gru_step(&p64, &[x], &h64).unwrap();
            h32 = gru_step(&p32, &[x as f32], &h32).unwrap();
        }
        for (a, b) in h64.iter().zip(&h32) {
            prop_assert!((a - *b as f64).abs() < 1e-4);
        }
    }
}
