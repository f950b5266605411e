//! Small hand-checkable instances used by tests, examples and the docs.

use crate::geometry::{parse_instance, Instance};
use crate::paths::{parse_paths, MovementSet};

/// Straight road (0,0)-(3,0) split by artificial nodes into three unit edges,
/// with unit-interval disk sites `a1..a3`, speeds in [0.5, 1], one user per
/// meter and unit rates.
pub const T1_NETWORK: &str = "\
node a 0 0
node n1 1 0 artificial
node n2 2 0 artificial
node b 3 0
edge e1 a n1 speed 0.5 1 density 1 1
edge e2 n1 n2 speed 0.5 1 density 1 1
edge e3 n2 b speed 0.5 1 density 1 1
site a1 0.5 0 disk 0.5 cost 1 rate 1 1
site a2 1.5 0 disk 0.5 cost 1 rate 1 1
site a3 2.5 0 disk 0.5 cost 1 rate 1 1
";

pub const T1_PATHS: &str = "path p a n1 n2 b\n";

/// Two parallel 10 m roads joined by a connector. Site `a` covers the first
/// half of both, `b` covers [5, 8] of the lower road, `c` [5, 8] of the upper.
pub const T3_NETWORK: &str = "\
node p0 0 0
node p1 10 0
node q0 0 100
node q1 10 100
edge low p0 p1
edge up q0 q1
edge link p0 q0
site a 2.5 50 poly 0 -1 5 -1 5 101 0 101 cost 1
site b 6.5 0 poly 5 -1 8 -1 8 1 5 1 cost 1
site c 6.5 100 poly 5 99 8 99 8 101 5 101 cost 1
";

pub const T3_PATHS: &str = "path p1 p0 p1\npath p2 q0 q1\n";

/// One 3 m edge with radius-1 disks centred at offsets 1 and 2.
pub const OVERLAP_NETWORK: &str = "\
node s 0 0
node t 3 0
edge e s t
site a1 1 0 disk 1
site a2 2 0 disk 1
";

pub const OVERLAP_PATHS: &str = "path p s t\n";

pub fn t1() -> (Instance, MovementSet) {
    load(T1_NETWORK, T1_PATHS)
}

pub fn t3() -> (Instance, MovementSet) {
    load(T3_NETWORK, T3_PATHS)
}

pub fn overlap() -> (Instance, MovementSet) {
    load(OVERLAP_NETWORK, OVERLAP_PATHS)
}

fn load(net: &str, paths: &str) -> (Instance, MovementSet) {
    let inst = parse_instance(net).expect("fixture network parses");
    let moves = parse_paths(paths, &inst.network).expect("fixture paths parse");
    (inst, moves)
}
