//! Small combinatorial helpers shared by the mesh and the element code.

/// All `k`-element subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Position of a sorted subset in the lexicographic list `subsets(n, k)`.
pub fn subset_index(n: usize, set: &[usize]) -> usize {
    let k = set.len();
    let mut idx = 0;
    let mut prev = 0;
    for (pos, &s) in set.iter().enumerate() {
        for skipped in prev..s {
            idx += binomial(n - skipped - 1, k - pos - 1);
        }
        prev = s + 1;
    }
    idx
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Sign of the permutation that sorts the concatenation `a ++ b` of two
/// disjoint sorted index lists, or `None` if they intersect.
pub fn merge_sign(a: &[usize], b: &[usize]) -> Option<i32> {
    let mut inversions = 0;
    for &x in a {
        for &y in b {
            if x == y {
                return None;
            }
            if x > y {
                inversions += 1;
            }
        }
    }
    Some(if inversions % 2 == 0 { 1 } else { -1 })
}

/// Sorted union of two disjoint sorted lists.
pub fn merge(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out
}

/// Multi-indices `alpha` with `alpha.len() == n` and `|alpha| == degree`, in
/// lexicographic order.
pub fn multi_indices(n: usize, degree: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i + 1 == n {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for a in (0..=left).rev() {
            cur.push(a);
            rec(i + 1, n, left - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if degree == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(0, n, degree, &mut Vec::with_capacity(n), &mut out);
    out
}
