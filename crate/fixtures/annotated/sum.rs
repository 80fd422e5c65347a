pub fn foo(a: &mut Vec<u32>, N: u32) 
    requires 
        old(a).len() == N,
        N <= 0x7FFF_FFFF,
{
    let mut i: usize = 0;
    while (i < N as usize)
        invariant
            0 <= i <= N,
            a.len() == N,
            N <= 0x7FFF_FFFF,
            forall|k: int| 0 <= k < i ==> a[k] <= 2,
    {
        if (a[i] > 2) {
            a.set(i, 2);
        } 
        i = i + 1;
    }
    i = 0;
    let mut sum: u32 = 0;
    while (i < N as usize)
        invariant
            0 <= i <= N,
            a.len() == N,
            N <= 0x7FFF_FFFF,
            forall|k: int| 0 <= k < a.len() ==> a[k] <= 2,
            sum <= 2 * i,
    {
        sum = sum + a[i];
        i = i + 1;
    }
    assert(sum <= 2 * N);
}
