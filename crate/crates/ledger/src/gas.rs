/// Gas to deploy the token contract for three institutions.
pub const DEPLOY_GAS_BASE: u64 = 1_473_028;
/// Additional deployment gas per institution beyond three.
pub const DEPLOY_GAS_PER_INSTITUTION: u64 = 34_399;
const BASE_INSTITUTIONS: u64 = 3;

/// USD cost of `gas` at `gas_price_gwei` and `eth_usd`.
pub fn estimate_gas_cost(gas: u64, gas_price_gwei: f64, eth_usd: f64) -> f64 {
    gas as f64 * gas_price_gwei * 1e-9 * eth_usd
}

/// Deployment gas, linear in the institution count.
pub fn deployment_gas(institutions: u64) -> u64 {
    if institutions >= BASE_INSTITUTIONS {
        DEPLOY_GAS_BASE + DEPLOY_GAS_PER_INSTITUTION * (institutions - BASE_INSTITUTIONS)
    } else {
        DEPLOY_GAS_BASE - DEPLOY_GAS_PER_INSTITUTION * (BASE_INSTITUTIONS - institutions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_institution_cost() {
        let c = estimate_gas_cost(DEPLOY_GAS_PER_INSTITUTION, 33.0, 1859.0);
        assert!((c - 2.11).abs() <= 0.01, "{c}");
        assert_eq!(estimate_gas_cost(0, 33.0, 1859.0), 0.0);
    }

    #[test]
    fn deployment_is_linear() {
        assert_eq!(deployment_gas(3), DEPLOY_GAS_BASE);
        assert_eq!(deployment_gas(5) - deployment_gas(4), DEPLOY_GAS_PER_INSTITUTION);
        assert_eq!(deployment_gas(3) - deployment_gas(2), DEPLOY_GAS_PER_INSTITUTION);
    }
}
