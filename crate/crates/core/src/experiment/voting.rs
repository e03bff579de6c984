/// Majority label; ties go to class 0.
pub fn voting_ensemble(labels: &[u8]) -> u8 {
    let ones = labels.iter().filter(|&&l| l == 1).count();
    if 2 * ones > labels.len() {
        1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_and_ties() {
        assert_eq!(voting_ensemble(&[1, 1, 1, 1, 1, 0, 0, 0, 0]), 1);
        assert_eq!(voting_ensemble(&[0; 9]), 0);
        assert_eq!(voting_ensemble(&[1; 9]), 1);
        assert_eq!(voting_ensemble(&[1, 0]), 0);
    }
}
