pub fn fill(a: &mut Vec<u64>, N: u64, c: u64)
    requires
        old(a).len() == N,
    ensures
        a.len() == N,
        forall|k: int| 0 <= k < N ==> a[k] == c,
{
    let mut i: usize = 0;
    while (i < N as usize)
    {
        a.set(i, c);
        i = i + 1;
    }
}
