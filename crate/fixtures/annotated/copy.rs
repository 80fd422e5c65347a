pub fn copy(a: &Vec<u32>, b: &mut Vec<u32>, N: u32)
    requires
        a.len() == N,
        old(b).len() == N,
    ensures
        b.len() == N,
        forall|k: int| 0 <= k < N ==> b[k] == a[k],
{
    let mut i: usize = 0;
    while (i < N as usize)
        invariant
            0 <= i <= N,
            a.len() == N,
            b.len() == N,
            forall|k: int| 0 <= k < i ==> b[k] == a[k],
    {
        b.set(i, a[i]);
        i = i + 1;
    }
}
