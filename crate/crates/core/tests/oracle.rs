//! Independent check of the intersection numbers: top-degree monomials in
//! the Chow ring, evaluated from the collections alone with machine integers
//! and cofactor inverses.

use std::collections::{BTreeSet, HashMap};

use toric_ch2::fan::minimal_nonfaces;
use toric_ch2::{shipped_database, Cone, Int, Intersections, Rat};

type Ray = [i64; 4];

struct ChowRing {
    rays: Vec<Ray>,
    collections: Vec<Vec<usize>>,
    memo: HashMap<[usize; 4], i64>,
}

fn det3(m: [[i64; 3]; 3]) -> i64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn minor(m: &[Ray; 4], row: usize, col: usize) -> i64 {
    let mut out = [[0; 3]; 3];
    for (r, src) in (0..4).filter(|&r| r != row).enumerate() {
        for (c, k) in (0..4).filter(|&c| c != col).enumerate() {
            out[r][c] = m[src][k];
        }
    }
    det3(out)
}

/// `m` with `<m, rows[k]> = 1` and `<m, rows[j]> = 0` otherwise, for a
/// unimodular matrix.
fn dual_column(rows: &[Ray; 4], k: usize) -> Ray {
    let det: i64 = (0..4)
        .map(|c: usize| if c.is_multiple_of(2) { 1 } else { -1 } * rows[0][c] * minor(rows, 0, c))
        .sum();
    assert_eq!(det.abs(), 1, "cone is not unimodular");
    let mut m = [0; 4];
    for (c, slot) in m.iter_mut().enumerate() {
        let sign = if (k + c).is_multiple_of(2) { 1 } else { -1 };
        *slot = sign * minor(rows, k, c) * det;
    }
    m
}

impl ChowRing {
    fn new(rays: Vec<Ray>, collections: Vec<Vec<usize>>) -> Self {
        ChowRing {
            rays,
            collections,
            memo: HashMap::new(),
        }
    }

    fn is_cone(&self, s: &BTreeSet<usize>) -> bool {
        !self
            .collections
            .iter()
            .any(|c| c.iter().all(|i| s.contains(i)))
    }

    fn max_cone_over(&self, s: &BTreeSet<usize>) -> Vec<usize> {
        let n = self.rays.len();
        let mut best = s.clone();
        for i in 1..=n {
            if best.len() == 4 {
                break;
            }
            let mut t = best.clone();
            t.insert(i);
            if !best.contains(&i) && self.is_cone(&t) && self.extends_to_max(&t) {
                best = t;
            }
        }
        assert_eq!(best.len(), 4, "no maximal cone over {s:?}");
        best.into_iter().collect()
    }

    fn extends_to_max(&self, s: &BTreeSet<usize>) -> bool {
        if s.len() == 4 {
            return true;
        }
        (1..=self.rays.len()).filter(|i| !s.contains(i)).any(|i| {
            let mut t = s.clone();
            t.insert(i);
            self.is_cone(&t) && self.extends_to_max(&t)
        })
    }

    /// Degree of `D_a D_b D_c D_d`.
    fn product(&mut self, mut ms: [usize; 4]) -> i64 {
        ms.sort_unstable();
        if let Some(&v) = self.memo.get(&ms) {
            return v;
        }
        let support: BTreeSet<usize> = ms.iter().copied().collect();
        let value = if !self.is_cone(&support) {
            0
        } else if support.len() == 4 {
            1
        } else {
            let a = (0..3)
                .map(|k| ms[k])
                .find(|&x| ms.iter().filter(|&&y| y == x).count() > 1)
                .unwrap();
            let sigma = self.max_cone_over(&support);
            let rows = [0, 1, 2, 3].map(|k| self.rays[sigma[k] - 1]);
            let pos = sigma.iter().position(|&i| i == a).unwrap();
            let m = dual_column(&rows, pos);
            let mut rest: Vec<usize> = ms.to_vec();
            rest.remove(rest.iter().position(|&x| x == a).unwrap());
            let mut total = 0;
            for j in (1..=self.rays.len()).filter(|j| !sigma.contains(j)) {
                let c: i64 = -(0..4).map(|k| m[k] * self.rays[j - 1][k]).sum::<i64>();
                if c != 0 {
                    total += c * self.product([rest[0], rest[1], rest[2], j]);
                }
            }
            total
        };
        self.memo.insert(ms, value);
        value
    }
}

fn as_i64(r: &toric_ch2::LatticePoint) -> Ray {
    r.0.clone().map(|x| i64::try_from(x).unwrap())
}

#[test]
fn ch2_and_curve_numbers_match_the_chow_ring() {
    let db = shipped_database();
    let mut surfaces = 0;
    for rec in &db.records {
        let fan = rec.build_fan().unwrap();
        let collections: Vec<Vec<usize>> = minimal_nonfaces(&fan)
            .iter()
            .map(|c| c.indices().to_vec())
            .collect();
        let mut ring = ChowRing::new(rec.rays.iter().map(as_i64).collect(), collections);
        let ix = Intersections::new(&fan);
        let n = fan.ray_count();

        let report = ix.classify().unwrap();
        for (sigma, value) in &report.values {
            let [i, j] = [sigma.indices()[0], sigma.indices()[1]];
            let sum: i64 = (1..=n).map(|w| ring.product([w, w, i, j])).sum();
            let expected = Rat::new(Int::from(sum), Int::from(2));
            assert_eq!(*value, expected, "{} {sigma}", rec.name);
            surfaces += 1;
        }
        for tau in fan.walls() {
            let t = tau.indices();
            for w in 1..=n {
                let expected = Rat::from_integer(Int::from(ring.product([w, t[0], t[1], t[2]])));
                assert_eq!(
                    ix.divisor_dot_curve(w, tau).unwrap(),
                    expected,
                    "{} D_{w}.{tau}",
                    rec.name
                );
            }
        }
    }
    assert!(surfaces > 1000, "only {surfaces} surfaces checked");
}

#[test]
fn oracle_agrees_on_small_cases() {
    // P^4: every D_i is the hyperplane class, H^4 = 1
    let p4 = vec![
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 1, 0],
        [0, 0, 0, 1],
        [-1, -1, -1, -1],
    ];
    let mut ring = ChowRing::new(p4, vec![vec![1, 2, 3, 4, 5]]);
    assert_eq!(ring.product([1, 1, 1, 1]), 1);
    assert_eq!(ring.product([5, 5, 2, 3]), 1);

    let db = shipped_database();
    let h2 = db.lookup("H2").unwrap();
    let fan = h2.build_fan().unwrap();
    let mut ring = ChowRing::new(
        h2.rays.iter().map(as_i64).collect(),
        h2.collections
            .iter()
            .map(|c| c.indices().to_vec())
            .collect(),
    );
    let sum: i64 = (1..=8).map(|w| ring.product([w, w, 3, 4])).sum();
    assert_eq!(sum, -3);
    assert_eq!(
        Intersections::new(&fan)
            .ch2_dot_surface(&Cone::new([3, 4]))
            .unwrap(),
        Rat::new(Int::from(-3), Int::from(2))
    );
}
