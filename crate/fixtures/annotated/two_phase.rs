pub fn two_phase(a: &mut Vec<u32>, b: &mut Vec<u32>, N: u32)
    requires
        old(a).len() == N,
        old(b).len() == N,
        N <= 0x3FFF_FFFF,
{
    let mut i: usize = 0;
    while (i < N as usize)
        invariant
            0 <= i <= N,
            a.len() == N,
            b.len() == N,
            N <= 0x3FFF_FFFF,
            forall|k: int| 0 <= k < i ==> a[k] == 1,
    {
        a.set(i, 1);
        i = i + 1;
    }
    i = 0;
    while (i < N as usize)
        invariant
            0 <= i <= N,
            a.len() == N,
            b.len() == N,
            N <= 0x3FFF_FFFF,
            forall|k: int| 0 <= k < N ==> a[k] == 1,
            forall|k: int| 0 <= k < i ==> b[k] == 2,
    {
        b.set(i, a[i] + 1);
        i = i + 1;
    }
    assert(forall|k: int| 0 <= k < N ==> b[k] == 2);
}
