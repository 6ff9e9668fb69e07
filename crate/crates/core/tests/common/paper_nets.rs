#![allow(dead_code)]

// incidence matrices as printed, rows are places and columns transitions
pub const PN2_A: [[i64; 8]; 7] = [
    [0, -1, 0, 0, 0, 0, 1, 0],
    [0, -1, 1, 0, 0, 0, 0, 0],
    [0, 1, -1, 0, 0, 0, 0, 0],
    [0, 0, 1, -1, -1, 0, 0, 1],
    [0, 0, 0, 1, 0, -1, 0, 0],
    [0, 0, 0, 0, 0, 1, -1, 0],
    [0, 0, 0, 0, 1, 0, 0, -1],
];

pub const PN3_A: [[i64; 5]; 6] = [
    [-1, 1, -1, 0, 0],
    [-1, 0, 0, 0, 0],
    [1, -1, 0, 0, 0],
    [0, 1, -1, 0, 0],
    [0, 0, 1, 0, 0],
    [0, 0, 0, 1, 1],
];

pub const PN4_A: [[i64; 3]; 6] = [
    [-1, 0, 0],
    [-1, 0, 1],
    [1, -1, 0],
    [0, 1, -1],
    [0, -1, 0],
    [0, 0, 1],
];
