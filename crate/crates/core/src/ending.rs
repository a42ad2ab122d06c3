/// Plateau test shared by the federated trainer and the swarm contract.
///
/// `history` holds one test result per completed round. Training stops once
/// more than `window` rounds have completed and none of the last `window`
/// results exceeded the best result seen before them.
pub fn plateau_reached<T: PartialOrd + Copy>(history: &[T], window: usize) -> bool {
    let window = window.max(1);
    if history.len() <= window {
        return false;
    }
    let (before, recent) = history.split_at(history.len() - window);
    let best = before.iter().copied().fold(before[0], |m, x| if x > m { x } else { m });
    !recent.iter().any(|&x| x > best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_history_stops_at_window_plus_one() {
        let w = 10;
        let h = vec![0.7; 30];
        let first = (1..=h.len()).find(|&r| plateau_reached(&h[..r], w));
        assert_eq!(first, Some(w + 1));
    }

    #[test]
    fn improving_history_never_stops() {
        let h: Vec<u64> = (0..100).collect();
        assert!((1..=h.len()).all(|r| !plateau_reached(&h[..r], 5)));
    }

    #[test]
    fn late_improvement_resets() {
        let mut h = vec![0.5; 5];
        h.push(0.6);
        h.extend([0.55; 2]);
        assert!(!plateau_reached(&h, 3));
        h.push(0.59);
        assert!(plateau_reached(&h, 3));
    }
}
