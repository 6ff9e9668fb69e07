use serde::{Deserialize, Serialize};

use crate::model::{Minutes, PriorityLevel, Train, TrainId, MINUTES_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OrderKind {
    Normal,
    Busy,
    Delayed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorityPolicy {
    /// Half-open `[start, end)` windows in minutes of the day.
    pub busy_windows: Vec<(Minutes, Minutes)>,
    pub delay_threshold: Minutes,
}

impl Default for PriorityPolicy {
    fn default() -> Self {
        PriorityPolicy {
            busy_windows: vec![(540, 660), (1020, 1140)],
            delay_threshold: 30,
        }
    }
}

use PriorityLevel::*;

const NORMAL: [PriorityLevel; 5] = [Y1, Y2, Y4, Y5, Y3];
const BUSY: [PriorityLevel; 5] = [Y1, Y4, Y5, Y2, Y3];
// y4 >= y1 >= y5 >= y2 > y3
const DELAYED: [PriorityLevel; 5] = [Y4, Y1, Y5, Y2, Y3];

/// Sort key for a contention set; smaller keys go first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContentionKey {
    class: u8,
    delay: Minutes,
    rank: u8,
    train: TrainId,
}

impl PriorityPolicy {
    pub fn is_busy(&self, t: Minutes) -> bool {
        let tod = t.rem_euclid(MINUTES_PER_DAY);
        self.busy_windows.iter().any(|&(s, e)| s <= tod && tod < e)
    }

    /// Delayed order wins over the busy order whenever the contention set holds
    /// a long-distance train delayed past the threshold.
    pub fn order_at(&self, t: Minutes, delayed_long_distance: bool) -> OrderKind {
        if delayed_long_distance {
            OrderKind::Delayed
        } else if self.is_busy(t) {
            OrderKind::Busy
        } else {
            OrderKind::Normal
        }
    }

    pub fn rank_in(order: OrderKind, level: PriorityLevel) -> u8 {
        let list = match order {
            OrderKind::Normal => &NORMAL,
            OrderKind::Busy => &BUSY,
            OrderKind::Delayed => &DELAYED,
        };
        list.iter().position(|&l| l == level).unwrap() as u8 + 1
    }

    pub fn is_over_threshold(&self, train: &Train, delay: Minutes) -> bool {
        train.category.is_long_distance() && delay > self.delay_threshold
    }

    /// Ordering key for `train` among `context`, a list of `(train, delay)`
    /// that contend for the same resource (the train itself included).
    pub fn contention_key(
        &self,
        train: &Train,
        delay: Minutes,
        t: Minutes,
        context: &[(&Train, Minutes)],
    ) -> ContentionKey {
        let delayed = context
            .iter()
            .any(|&(tr, d)| self.is_over_threshold(tr, d))
            || self.is_over_threshold(train, delay);
        let order = self.order_at(t, delayed);
        let rank = Self::rank_in(order, train.level());
        match order {
            // the weak ">=" links form one class, ordered by smaller delay first
            OrderKind::Delayed => ContentionKey {
                class: u8::from(train.level() == Y3),
                delay: delay.max(0),
                rank,
                train: train.id,
            },
            _ => ContentionKey {
                class: 0,
                delay: 0,
                rank,
                train: train.id,
            },
        }
    }

    /// Sorts `(train, delay)` pairs from highest to lowest priority at `t`.
    pub fn order_trains<'a>(
        &self,
        t: Minutes,
        contenders: &[(&'a Train, Minutes)],
    ) -> Vec<&'a Train> {
        let mut keyed: Vec<_> = contenders
            .iter()
            .map(|&(tr, d)| (self.contention_key(tr, d, t, contenders), tr))
            .collect();
        keyed.sort_by_key(|(k, _)| *k);
        keyed.into_iter().map(|(_, tr)| tr).collect()
    }
}

/// Rank (1 = highest) of the train's level in the order active at `t`, taking
/// the train itself as the contention context.
pub fn priority_rank(policy: &PriorityPolicy, train: &Train, t: Minutes, delay: Minutes) -> u8 {
    let order = policy.order_at(t, policy.is_over_threshold(train, delay));
    PriorityPolicy::rank_in(order, train.level())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Category;

    #[test]
    fn rank_examples() {
        let p = PriorityPolicy::default();
        let mail = Train::new(1, "12303", Category::Mail);
        assert_eq!(priority_rank(&p, &mail, 720, 0), 2);
        let pass = Train::new(2, "13051", Category::Passenger);
        assert_eq!(priority_rank(&p, &pass, 600, 0), 2);
        let freight = Train::new(3, "F1", Category::Freight);
        for t in [0, 600, 720, 1100] {
            for d in [0, 45] {
                assert_eq!(priority_rank(&p, &freight, t, d), 5);
            }
        }
    }

    #[test]
    fn busy_window_edges() {
        let p = PriorityPolicy::default();
        assert!(!p.is_busy(539));
        assert!(p.is_busy(540));
        assert!(p.is_busy(1139));
        assert!(!p.is_busy(1140));
        assert!(p.is_busy(540 + MINUTES_PER_DAY));
    }

    #[test]
    fn delayed_context_promotes_on_time_passenger() {
        let p = PriorityPolicy::default();
        let prem = Train::new(1, "12301", Category::Premium);
        let pass = Train::new(2, "13051", Category::Passenger);
        let ctx = [(&prem, 40), (&pass, 0)];
        let order = p.order_trains(720, &ctx);
        assert_eq!(order[0].id, pass.id);
        let ctx = [(&prem, 10), (&pass, 0)];
        assert_eq!(p.order_trains(720, &ctx)[0].id, prem.id);
    }
}
