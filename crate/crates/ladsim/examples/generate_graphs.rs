//! Every generator once, printed in the edge-list text format.
//!
//! cargo run --example generate_graphs

use ladsim::graph::{generate, GenKind, GenParams, PortLabeledGraph};

fn main() {
    for kind in [GenKind::Path, GenKind::Ring, GenKind::Tree, GenKind::RandomConnected, GenKind::LowerBound] {
        let params = GenParams::n(10).colors(3).edges(14).group(5);
        let g = generate(kind, &params, 7).expect("valid parameters");
        println!("# {}: n={} m={} max degree {}", kind.name(), g.node_count(), g.edge_count(), g.max_degree());
        let text = g.to_text();
        print!("{text}");
        assert_eq!(PortLabeledGraph::parse(&text).expect("round trip"), g);
    }
}
