pub mod toy_oracle;
