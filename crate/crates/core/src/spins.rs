//! Spin configurations and the enumeration order of the `2^N` basis.
//!
//! Bit `j` of a basis index is set exactly when spin `j` is `-1`, so index 0
//! is the all-up configuration.

/// A configuration of `N` Ising spins, each `+1` or `-1`.
pub type SpinConfiguration = Vec<i8>;

pub fn config_from_index(index: usize, n_sites: usize) -> SpinConfiguration {
    (0..n_sites)
        .map(|j| if (index >> j) & 1 == 1 { -1 } else { 1 })
        .collect()
}

pub fn index_of(x: &[i8]) -> usize {
    x.iter()
        .enumerate()
        .fold(0, |acc, (j, &s)| if s < 0 { acc | (1 << j) } else { acc })
}

/// All `2^N` configurations in basis-index order.
pub fn enumerate_configs(n_sites: usize) -> impl Iterator<Item = SpinConfiguration> {
    (0..1usize << n_sites).map(move |i| config_from_index(i, n_sites))
}

pub fn is_valid_config(x: &[i8]) -> bool {
    x.iter().all(|&s| s == 1 || s == -1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_index_is_all_up() {
        assert_eq!(config_from_index(0, 3), vec![1, 1, 1]);
        assert_eq!(config_from_index(5, 3), vec![-1, 1, -1]);
    }

    proptest! {
        #[test]
        fn index_round_trip(n in 1usize..16, raw in any::<u32>()) {
            let idx = raw as usize % (1 << n);
            prop_assert_eq!(index_of(&config_from_index(idx, n)), idx);
        }
    }
}
