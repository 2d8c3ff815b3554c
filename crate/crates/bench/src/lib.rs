pub use hfz2;
