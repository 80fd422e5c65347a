fn reverse(v: &mut Vec<u64>)
ensures
    v.len() == old(v).len(),
    forall|i:int| 0 <= i < old(v).len() ==> 
        v[i] == old(v)[old(v).len() - i -1]
{
    let length = v.len();
    let mut n: usize = 0;
    while n < length / 2
    {
        let x = v[n];
        let y = v[length - 1 - n];
        v.set(n, y);
        v.set(length - 1 - n, x);
        n = n + 1;
    }
}
