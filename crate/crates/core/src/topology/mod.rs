//! Homotopy classes of double-dimer loops relative to the zippers, lamination
//! statistics and Haar-measure extraction of lamination coefficients.

mod distribution;
mod haar;
mod word;

pub use distribution::{lamination_distribution_from_samples, mu0_lamination_distribution_exact, LamDistribution, LamRow};
pub use haar::{
    haar_extract, su2_trace_moment, weyl_nodes, HaarCoefficient, HaarMode, DEFAULT_HAAR_SAMPLES, HAAR_CHUNK,
};
pub use word::{classify_loop, classify_walk, lamination_of, loop_classes, Lamination, LoopClass};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{make_zipper, Connection, Matrix2, Walk, Zipper};
    use crate::enumeration::{enumerate_dimer_covers, enumerate_double_dimer, pair_to_config, DEFAULT_CAP};
    use crate::kasteleyn::{assemble, kasteleyn_signs, Route};
    use crate::lattice::{cylinder_axis_cut, cylinder_graph, PlanarGraph};
    use num_complex::Complex64;

    fn axis(n: usize, m: usize, a: Matrix2) -> (PlanarGraph, Zipper) {
        let g = cylinder_graph(n, m).unwrap();
        let z = make_zipper(&g, &cylinder_axis_cut(n, m, 0), a).unwrap();
        (g, z)
    }

    fn g1() -> LoopClass {
        LoopClass::generator(0)
    }

    #[test]
    fn girth_loop_is_a_generator() {
        let (g, z) = axis(3, 1, Matrix2::identity());
        let walk = Walk::from_vertices(&g, &[0, 1, 2, 3, 4, 5]).unwrap();
        let c = classify_walk(&g, &walk, &[z.clone()]);
        assert_eq!(c, g1());
        assert_eq!(classify_walk(&g, &walk.reversed(), &[z.clone()]), g1());
        assert_eq!(c.winding(1).iter().map(|w| w.abs()).sum::<i32>(), 1);
        let (g, z) = axis(3, 2, Matrix2::identity());
        for f in g.bounded_faces() {
            assert!(classify_walk(&g, &Walk::face(&g, f), std::slice::from_ref(&z)).is_contractible());
        }
    }

    #[test]
    fn exact_distributions() {
        let (g, z) = axis(1, 1, Matrix2::identity());
        let d = mu0_lamination_distribution_exact(&g, &[z], DEFAULT_CAP).unwrap();
        assert_eq!(d.probability(&Lamination::empty()), 0.5);
        assert_eq!(d.probability(&Lamination::new(vec![g1()])), 0.5);

        let c4 = PlanarGraph::grid(2, 2).unwrap();
        let d = mu0_lamination_distribution_exact(&c4, &[], DEFAULT_CAP).unwrap();
        assert_eq!(d.probabilities.len(), 1);
        assert_eq!(d.probability(&Lamination::empty()), 1.0);

        let (g, z) = axis(3, 1, Matrix2::identity());
        let d = mu0_lamination_distribution_exact(&g, &[z.clone()], DEFAULT_CAP).unwrap();
        assert_eq!(d.probability(&Lamination::new(vec![g1()])), 0.5);
        let covers = enumerate_dimer_covers(&g, DEFAULT_CAP).unwrap();
        assert_eq!(lamination_of(&g, &pair_to_config(&g, &covers[0], &covers[1]), &[z.clone()]), Lamination::new(vec![g1()]));
        assert!(lamination_of(&g, &pair_to_config(&g, &covers[0], &covers[0]), &[z]).is_empty());
    }

    #[test]
    fn nested_loops_and_reweighting() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
        let (g, z) = axis(3, 2, Matrix2::identity());
        let d = mu0_lamination_distribution_exact(&g, &[z.clone()], DEFAULT_CAP).unwrap();
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
        assert!(d.probability(&Lamination::parallel(g1(), 2)) > 0.0);
        let sw = kasteleyn_signs(&g).unwrap();
        let z_id = assemble(&g, &sw, &Connection::from_zippers(&g, vec![z.clone()]).unwrap())
            .unwrap()
            .qdet(Route::DoubledDet)
            .unwrap()
            .value;
        for _ in 0..3 {
            let lambda = Complex64::new(0.5, 0.0) + Complex64::new(rand::Rng::random::<f64>(&mut rng), 0.3);
            let a = Matrix2::diag(lambda);
            let mut za = z.clone();
            za.matrix = a;
            let k = assemble(&g, &sw, &Connection::from_zippers(&g, vec![za]).unwrap()).unwrap();
            let ratio = k.qdet(Route::DoubledDet).unwrap().value / z_id;
            assert!((d.reweighted(&[a]) - ratio).norm() < 1e-9 * ratio.norm().max(1.0));
        }
        let csv = {
            let mut buf = Vec::new();
            d.write_csv(&mut buf).unwrap();
            String::from_utf8(buf).unwrap()
        };
        assert!(csv.starts_with("lamination,probability,stderr\n\"{}\","));
        assert!(d.to_json().unwrap().contains("\"total_mass\""));
    }

    /// `N_k`: configurations with `k` noncontractible loops, each weighted by
    /// `2^(contractible loops)`.
    fn loop_polynomial(g: &PlanarGraph, z: &Zipper) -> Vec<f64> {
        let mut n = Vec::new();
        for (cfg, _) in enumerate_double_dimer(g, DEFAULT_CAP).unwrap() {
            let classes = loop_classes(g, &cfg, std::slice::from_ref(z));
            let k = classes.iter().filter(|c| !c.is_contractible()).count();
            if n.len() <= k {
                n.resize(k + 1, 0.0);
            }
            n[k] += 2f64.powi((classes.len() - k) as i32);
        }
        n
    }

    #[test]
    fn haar_recovers_cylinder_loop_polynomial() {
        let (g, z) = axis(3, 2, Matrix2::identity());
        let want = loop_polynomial(&g, &z);
        assert_eq!(want.len(), 3);
        let sw = kasteleyn_signs(&g).unwrap();
        let eval = |u: &[Matrix2]| {
            let mut zu = z.clone();
            zu.matrix = u[0];
            let conn = Connection::from_zippers(&g, vec![zu])?;
            Ok(assemble(&g, &sw, &conn)?.qdet(Route::DoubledDet)?.value)
        };
        let lams: Vec<Lamination> = (0..want.len()).map(|k| Lamination::parallel(g1(), k)).collect();
        let out = haar_extract(eval, &lams, 1, HaarMode::Quadrature { degree: 4 }).unwrap();
        for (o, w) in out.iter().zip(&want) {
            assert!((o.value - w).norm() < 1e-8, "{} vs {w}", o.value);
        }
        let out = haar_extract(eval, &lams, 1, HaarMode::MonteCarlo { samples: 4000, seed: 9 }).unwrap();
        for (o, w) in out.iter().zip(&want) {
            assert!((o.value - w).norm() < 1e-6 * w.max(1.0), "{} vs {w}", o.value);
        }
    }
}
