//! Big-endian binary reader shared by the wire formats.

use crate::group::Group;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("input truncated")]
    Truncated,
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
    #[error("invalid group element encoding")]
    InvalidElement,
    #[error("non-canonical scalar encoding")]
    InvalidScalar,
    #[error("invalid identity string")]
    InvalidId,
    #[error("invalid field: {0}")]
    Invalid(&'static str),
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Reader { buf }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.buf.len() < n {
            return Err(DecodeError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub(crate) fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16, DecodeError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    pub(crate) fn u32(&mut self) -> Result<u32, DecodeError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes(b.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64, DecodeError> {
        let b = self.take(8)?;
        Ok(u64::from_be_bytes(b.try_into().unwrap()))
    }

    pub(crate) fn element<G: Group>(&mut self, g: &G) -> Result<G::Element, DecodeError> {
        let b = self.take(g.element_len())?;
        g.decode(b).ok_or(DecodeError::InvalidElement)
    }

    pub(crate) fn scalar<G: Group>(&mut self, g: &G) -> Result<G::Scalar, DecodeError> {
        let b = self.take(g.scalar_len())?;
        g.scalar_from_bytes(b).ok_or(DecodeError::InvalidScalar)
    }

    pub(crate) fn finish(self) -> Result<(), DecodeError> {
        match self.buf.len() {
            0 => Ok(()),
            n => Err(DecodeError::TrailingBytes(n)),
        }
    }
}
