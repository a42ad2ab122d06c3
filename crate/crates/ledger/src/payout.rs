use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::contract::{Address, Rejection, FIXED_POINT};

/// Contributions are paid against a maximum effective utility of 0.5.
pub const U_MAX_FIXED: u64 = FIXED_POINT / 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Settlement {
    pub payouts: BTreeMap<Address, u64>,
    pub leftover: u64,
    pub refunds: BTreeMap<Address, u64>,
}

/// Splits `fund` between `payees` in proportion to their fixed-point
/// contributions and refunds the rest to depositors pro-rata. The integer
/// remainder of the refund goes to the largest depositor (lowest address on
/// ties).
pub fn settle_payout(
    depositors: &BTreeMap<Address, u64>,
    payees: &[Address],
    contributions: &[u64],
    fund: u64,
) -> Result<Settlement, Rejection> {
    if payees.len() != contributions.len() {
        return Err(Rejection::WrongReportLength {
            expected: payees.len(),
            found: contributions.len(),
        });
    }
    let total: u128 = contributions.iter().map(|&c| c as u128).sum();
    if total > U_MAX_FIXED as u128 {
        return Err(Rejection::ExceedsCap);
    }
    let mut payouts = BTreeMap::new();
    let mut paid: u64 = 0;
    for (addr, &c) in payees.iter().zip(contributions) {
        let amount = (fund as u128 * c as u128 / U_MAX_FIXED as u128) as u64;
        *payouts.entry(*addr).or_insert(0) += amount;
        paid += amount;
    }
    let leftover = fund - paid;
    let deposited: u128 = depositors.values().map(|&d| d as u128).sum();
    let mut refunds = BTreeMap::new();
    if leftover > 0 {
        if deposited == 0 {
            return Err(Rejection::InvalidAmount);
        }
        let mut refunded: u64 = 0;
        for (addr, &d) in depositors {
            let share = (leftover as u128 * d as u128 / deposited) as u64;
            refunds.insert(*addr, share);
            refunded += share;
        }
        let largest = depositors
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(a, _)| *a)
            .expect("nonempty depositors");
        *refunds.get_mut(&largest).expect("largest depositor present") += leftover - refunded;
    }
    Ok(Settlement {
        payouts,
        leftover,
        refunds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::to_fixed;

    fn one_depositor(amount: u64) -> BTreeMap<Address, u64> {
        [(Address(0), amount)].into()
    }

    #[test]
    fn worked_example() {
        let payees = [Address(1), Address(2)];
        let s = settle_payout(&one_depositor(1000), &payees, &[to_fixed(0.2), to_fixed(0.1)], 1000).unwrap();
        assert_eq!(s.payouts[&Address(1)], 400);
        assert_eq!(s.payouts[&Address(2)], 200);
        assert_eq!(s.leftover, 400);
        assert_eq!(s.refunds[&Address(0)], 400);
    }

    #[test]
    fn zero_contributions_refund_everything() {
        let s = settle_payout(&one_depositor(777), &[Address(1)], &[0], 777).unwrap();
        assert_eq!(s.payouts[&Address(1)], 0);
        assert_eq!(s.leftover, 777);
        assert_eq!(s.refunds[&Address(0)], 777);
    }

    #[test]
    fn perfect_coalition_exhausts_the_fund() {
        let s = settle_payout(
            &one_depositor(1001),
            &[Address(1), Address(2)],
            &[to_fixed(0.25), to_fixed(0.25)],
            1001,
        )
        .unwrap();
        assert_eq!(s.leftover, 1);
        let s = settle_payout(
            &one_depositor(1000),
            &[Address(1), Address(2)],
            &[to_fixed(0.3), to_fixed(0.2)],
            1000,
        )
        .unwrap();
        assert_eq!(s.leftover, 0);
        assert!(s.refunds.is_empty());
    }

    #[test]
    fn refund_remainder_goes_to_largest_depositor() {
        let deps: BTreeMap<Address, u64> = [(Address(7), 1), (Address(8), 2), (Address(9), 2)].into();
        let s = settle_payout(&deps, &[Address(1)], &[0], 5).unwrap();
        // 5 * (1/5, 2/5, 2/5) = (1, 2, 2): no remainder
        assert_eq!(s.refunds.values().copied().collect::<Vec<_>>(), vec![1, 2, 2]);
        let s = settle_payout(&deps, &[Address(1)], &[0], 7).unwrap();
        // floor(7/5)=1, floor(14/5)=2, floor(14/5)=2, remainder 2 to 0x..08
        assert_eq!(s.refunds.values().copied().collect::<Vec<_>>(), vec![1, 4, 2]);
    }

    #[test]
    fn cap_and_length_are_checked() {
        let deps = one_depositor(10);
        assert_eq!(
            settle_payout(&deps, &[Address(1)], &[U_MAX_FIXED + 1], 10),
            Err(Rejection::ExceedsCap)
        );
        assert!(matches!(
            settle_payout(&deps, &[Address(1)], &[1, 2], 10),
            Err(Rejection::WrongReportLength { .. })
        ));
    }
}
