#![allow(dead_code)]

use railsched::constraints::{priority_rank, OrderKind, PriorityPolicy};
use railsched::model::{Category, Minutes, PriorityLevel, Train};

pub const NORMAL: &str = "y1 > y2 > y4 > y5 > y3";
pub const BUSY: &str = "y1 > y4 > y5 > y2 > y3";
pub const DELAYED: &str = "y4 >= y1 >= y5 >= y2 > y3";

/// Every pair `(a, b, strict)` implied by a chain such as "y1 > y2 >= y3".
pub fn pairs(chain: &str) -> Vec<(u8, u8, bool)> {
    let tokens: Vec<&str> = chain.split_whitespace().collect();
    let levels: Vec<u8> = tokens.iter().step_by(2).map(|t| t[1..].parse().unwrap()).collect();
    let ops: Vec<bool> = tokens.iter().skip(1).step_by(2).map(|&o| o == ">").collect();
    let mut out = Vec::new();
    for i in 0..levels.len() {
        for j in i + 1..levels.len() {
            out.push((levels[i], levels[j], ops[i..j].iter().any(|&s| s)));
        }
    }
    out
}

pub fn train_at(y: u8) -> Train {
    let cat = Category::ALL.into_iter().find(|c| c.level() == PriorityLevel::ALL[y as usize - 1]).unwrap();
    Train::new(u32::from(y), format!("y{y}"), cat)
}

fn rank(order: OrderKind, y: u8) -> u8 {
    PriorityPolicy::rank_in(order, PriorityLevel::ALL[y as usize - 1])
}

/// Checks the three orders against the printed chains and the window edges.
pub fn check_all() -> Result<(), String> {
    let p = PriorityPolicy::default();
    for (order, chain) in [(OrderKind::Normal, NORMAL), (OrderKind::Busy, BUSY), (OrderKind::Delayed, DELAYED)] {
        let ranks: Vec<u8> = (1..=5).map(|y| rank(order, y)).collect();
        let mut sorted = ranks.clone();
        sorted.sort();
        if sorted != [1, 2, 3, 4, 5] {
            return Err(format!("{order:?} ranks {ranks:?} are not a total order"));
        }
        for (a, b, strict) in pairs(chain) {
            let (ra, rb) = (rank(order, a), rank(order, b));
            let ok = if strict { ra < rb } else { ra <= rb };
            if !ok {
                return Err(format!("{order:?}: y{a} rank {ra} vs y{b} rank {rb}"));
            }
        }
    }
    // an on-time train of every level, read through priority_rank
    let cases: [(Minutes, OrderKind); 6] = [
        (539, OrderKind::Normal),
        (540, OrderKind::Busy),
        (1019, OrderKind::Normal),
        (1139, OrderKind::Busy),
        (1140, OrderKind::Normal),
        (720, OrderKind::Normal),
    ];
    for (t, order) in cases {
        if p.order_at(t, false) != order {
            return Err(format!("t={t} selects {:?}", p.order_at(t, false)));
        }
        for y in 1..=5 {
            let got = priority_rank(&p, &train_at(y), t, 0);
            if got != rank(order, y) {
                return Err(format!("t={t} y{y}: rank {got}"));
            }
        }
    }
    // a long-distance train past the threshold switches to the delayed order
    for t in [539, 540, 1139, 1140] {
        if p.order_at(t, true) != OrderKind::Delayed {
            return Err(format!("t={t} ignores a delayed long-distance train"));
        }
        for y in [1, 2, 3] {
            let got = priority_rank(&p, &train_at(y), t, p.delay_threshold + 1);
            if got != rank(OrderKind::Delayed, y) {
                return Err(format!("t={t} delayed y{y}: rank {got}"));
            }
            let at_threshold = priority_rank(&p, &train_at(y), t, p.delay_threshold);
            if at_threshold != priority_rank(&p, &train_at(y), t, 0) {
                return Err(format!("t={t} y{y}: a delay equal to the threshold changed the order"));
            }
        }
    }
    Ok(())
}
