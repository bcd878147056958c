use petgraph::algo::has_path_connecting;
use petgraph::graphmap::DiGraphMap;
use rand::seq::index::sample;
use rand::Rng;

use super::{flow, next_flow_id, GenError, Range};
use crate::model::{AppId, Flow, ModeRef};

/// `floor(density * n(n-1)/2)`, with a small slack so that products such as
/// `0.29 * 100` do not round down a whole edge.
pub fn target_edge_count(n: usize, density: f64) -> usize {
    let pairs = (n * n.saturating_sub(1) / 2) as f64;
    (density * pairs + 1e-9).floor() as usize
}

/// Random acyclic application graph. Edge `(a, b)` means `a` depends on `b`.
///
/// Edges between random distinct pairs are added one at a time; an edge that
/// closes a cycle is removed again. Returns the edges sorted.
pub fn gen_app_graph<R: Rng + ?Sized>(
    n: usize,
    density: f64,
    rng: &mut R,
) -> Result<Vec<(AppId, AppId)>, GenError> {
    if n == 0 {
        return Err(GenError::InvalidParams(
            "graph needs at least one node".into(),
        ));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(GenError::InvalidParams(format!(
            "density {density} outside [0, 1]"
        )));
    }
    let target = target_edge_count(n, density);
    let mut graph: DiGraphMap<u32, ()> = DiGraphMap::new();
    for i in 0..n as u32 {
        graph.add_node(i);
    }

    let max_attempts = 100 * n * n;
    let mut attempts = 0;
    while graph.edge_count() < target {
        if attempts >= max_attempts {
            return Err(GenError::DensityUnreachable {
                target,
                reached: graph.edge_count(),
                attempts,
            });
        }
        attempts += 1;
        let a = rng.gen_range(0..n as u32);
        let b = rng.gen_range(0..n as u32);
        if a == b || graph.contains_edge(a, b) || graph.contains_edge(b, a) {
            continue;
        }
        graph.add_edge(a, b, ());
        if has_path_connecting(&graph, b, a, None) {
            graph.remove_edge(a, b);
        }
    }

    let mut edges: Vec<(AppId, AppId)> = graph
        .all_edges()
        .map(|(a, b, _)| (AppId(a), AppId(b)))
        .collect();
    edges.sort();
    Ok(edges)
}

/// Mode-level edges for every application edge. For `(i, k)` a count `c` in
/// `[1, min(m_i, m_k)]` is drawn, `c` distinct levels are sampled on each
/// side, and the sorted samples are paired in order so no two edges cross.
pub fn gen_mode_edges<R: Rng + ?Sized>(
    app_edges: &[(AppId, AppId)],
    mode_counts: &[u32],
    rng: &mut R,
) -> Vec<(ModeRef, ModeRef)> {
    let mut out = Vec::new();
    for &(from, to) in app_edges {
        let m_from = mode_counts[from.index()] as usize;
        let m_to = mode_counts[to.index()] as usize;
        let c = rng.gen_range(1..=m_from.min(m_to));
        let mut from_levels = sample(rng, m_from, c).into_vec();
        let mut to_levels = sample(rng, m_to, c).into_vec();
        from_levels.sort_unstable();
        to_levels.sort_unstable();
        out.extend(from_levels.into_iter().zip(to_levels).map(|(j, l)| {
            (
                ModeRef::new(from, j as u32 + 1),
                ModeRef::new(to, l as u32 + 1),
            )
        }));
    }
    out
}

/// Flows for every mode edge, from the depending mode to the provider.
/// Ids are assigned sequentially from 0.
pub fn gen_flows<R: Rng + ?Sized>(
    mode_edges: &[(ModeRef, ModeRef)],
    per_edge: (u32, u32),
    mbps: Range,
    rng: &mut R,
) -> Vec<Flow> {
    let mut counter = 0;
    let mut out = Vec::new();
    for &(src, dst) in mode_edges {
        let count = rng.gen_range(per_edge.0..=per_edge.1);
        for _ in 0..count {
            let rate = mbps.sample(rng);
            out.push(flow(next_flow_id(&mut counter), src, dst, rate));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use petgraph::algo::is_cyclic_directed;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn acyclic(n: usize, edges: &[(AppId, AppId)]) -> bool {
        let mut g: DiGraphMap<u32, ()> = DiGraphMap::new();
        for i in 0..n as u32 {
            g.add_node(i);
        }
        for (a, b) in edges {
            g.add_edge(a.0, b.0, ());
        }
        !is_cyclic_directed(&g)
    }

    #[test]
    fn edge_count_uses_floor() {
        // 0.05 * 45 = 2.25
        assert_eq!(target_edge_count(10, 0.05), 2);
        assert_eq!(target_edge_count(2, 1.0), 1);
        assert_eq!(target_edge_count(1, 1.0), 0);
        assert_eq!(target_edge_count(30, 0.10), 43);
        assert_eq!(target_edge_count(100, 0.29), 1435);
    }

    #[test]
    fn small_graphs() {
        let g = gen_app_graph(10, 0.05, &mut rng(1)).unwrap();
        assert_eq!(g.len(), 2);
        assert!(acyclic(10, &g));

        let g = gen_app_graph(2, 1.0, &mut rng(1)).unwrap();
        assert_eq!(g.len(), 1);
        assert!(acyclic(2, &g));

        for d in [0.0, 0.5, 1.0] {
            assert!(gen_app_graph(1, d, &mut rng(1)).unwrap().is_empty());
        }
    }

    #[test]
    fn complete_density_gives_a_tournament() {
        let g = gen_app_graph(12, 1.0, &mut rng(4)).unwrap();
        assert_eq!(g.len(), 66);
        assert!(acyclic(12, &g));
    }

    #[test]
    fn bad_density_rejected() {
        assert!(gen_app_graph(5, 1.2, &mut rng(1)).is_err());
        assert!(gen_app_graph(5, -0.1, &mut rng(1)).is_err());
    }

    #[test]
    fn single_mode_pair_gets_one_edge() {
        let edges = gen_mode_edges(&[(AppId(0), AppId(1))], &[1, 1], &mut rng(3));
        assert_eq!(
            edges,
            vec![(ModeRef::new(AppId(0), 1), ModeRef::new(AppId(1), 1))]
        );
    }

    #[test]
    fn full_sample_pairs_levels_in_order() {
        // Find a draw where c = 3 and check the pairing.
        let mut found = false;
        for seed in 0..64 {
            let edges = gen_mode_edges(&[(AppId(0), AppId(1))], &[3, 3], &mut rng(seed));
            if edges.len() == 3 {
                let pairs: Vec<(u32, u32)> =
                    edges.iter().map(|(a, b)| (a.level, b.level)).collect();
                assert_eq!(pairs, vec![(1, 1), (2, 2), (3, 3)]);
                found = true;
            }
        }
        assert!(found);
    }

    #[test]
    fn mode_edges_never_cross() {
        let mut r = rng(11);
        for _ in 0..500 {
            let mi = r.gen_range(1..=5);
            let mk = r.gen_range(1..=5);
            let edges = gen_mode_edges(&[(AppId(0), AppId(1))], &[mi, mk], &mut r);
            assert!(!edges.is_empty() && edges.len() <= mi.min(mk) as usize);
            for a in &edges {
                for b in &edges {
                    assert!(!(a.0.level < b.0.level && a.1.level > b.1.level));
                }
            }
        }
    }

    #[test]
    fn flows_per_edge_and_ranges() {
        assert!(gen_flows(&[], (1, 5), Range::new(0.1, 2.0), &mut rng(1)).is_empty());

        let edge = (ModeRef::new(AppId(0), 1), ModeRef::new(AppId(1), 1));
        let one = gen_flows(&[edge], (1, 1), Range::new(0.1, 0.1), &mut rng(1));
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].target_mbps, 0.1);
        assert_eq!((one[0].src, one[0].dst), edge);

        let edges = vec![edge; 200];
        let flows = gen_flows(&edges, (1, 5), Range::new(0.1, 2.0), &mut rng(2));
        assert!(flows.len() >= 200 && flows.len() <= 1000);
        assert!(flows.iter().all(|f| (0.1..=2.0).contains(&f.target_mbps)));
        assert!(flows.iter().enumerate().all(|(i, f)| f.id.0 == i as u32));
    }
}
