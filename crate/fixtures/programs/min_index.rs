pub fn min_index(a: &Vec<i32>, N: u32)
    requires
        a.len() == N,
        N > 0,
{
    let mut m: usize = 0;
    let mut i: usize = 1;
    while (i < N as usize)
    {
        if (a[i] < a[m]) {
            m = i;
        }
        i = i + 1;
    }
    assert(m < N);
    assert(forall|k: int| 0 <= k < N ==> a[m as int] <= a[k]);
}
