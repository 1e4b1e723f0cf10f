#![allow(dead_code)]

pub mod expr_corpus;
