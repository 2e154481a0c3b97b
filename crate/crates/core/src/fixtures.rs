//! Small reference graphs used by tests, benches and the `reproduce` command.

use crate::graph::BaseTopology;
use crate::ingest;

const LES_MISERABLES_GML: &str = include_str!("../data/lesmis.gml");

/// Two 4-cliques joined by the length-two bridge `0 - 4 - 5`.
///
/// Clique one is `{0, 1, 2, 3}`, clique two is `{5, 6, 7, 8}`, and node 4 is
/// the only intermediary (ids are one less than in the usual 1-based drawing).
pub fn two_cliques() -> BaseTopology {
    let mut edges = Vec::new();
    for clique in [[0, 1, 2, 3], [5, 6, 7, 8]] {
        for a in 0..4 {
            for b in a + 1..4 {
                edges.push((clique[a], clique[b]));
            }
        }
    }
    edges.push((0, 4));
    edges.push((4, 5));
    BaseTopology::unweighted(9, edges).expect("fixture is well formed")
}

pub fn triangle() -> BaseTopology {
    BaseTopology::unweighted(3, [(0, 1), (1, 2), (0, 2)]).expect("fixture is well formed")
}

/// Five nodes, six edges: a 4-cycle with a chord plus a pendant path.
pub fn kite() -> BaseTopology {
    BaseTopology::unweighted(5, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (3, 4)])
        .expect("fixture is well formed")
}

/// Primary nodes `{0, 1, 2, 3}` plus a fallback triangle `{4, 5, 6}` hanging
/// off node 3 through a single link.
pub fn fallback_demo() -> BaseTopology {
    BaseTopology::unweighted(
        7,
        [(0, 1), (1, 2), (2, 3), (0, 2), (3, 4), (4, 5), (5, 6), (4, 6)],
    )
    .expect("fixture is well formed")
}

/// The Les Misérables co-occurrence network (77 nodes, 254 weighted edges).
pub fn les_miserables() -> BaseTopology {
    ingest::parse_gml(LES_MISERABLES_GML).expect("bundled GML parses")
}

pub fn les_miserables_gml() -> &'static str {
    LES_MISERABLES_GML
}
