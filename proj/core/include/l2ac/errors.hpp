#pragma once

#include <stdexcept>
#include <string>

namespace l2ac {

// Base class for every error this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error { public: using Error::Error; };
class IndexError : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };
class IoError    : public Error { public: using Error::Error; };

class ZeroVectorError          : public Error { public: using Error::Error; };
class UnknownClassError        : public Error { public: using Error::Error; };
class DuplicateClassError      : public Error { public: using Error::Error; };
class InsufficientClassesError : public Error { public: using Error::Error; };
class ClassTooSmallError       : public Error { public: using Error::Error; };

class EmptyDocumentError      : public Error { public: using Error::Error; };
class UnsupportedEncoderError : public Error { public: using Error::Error; };
class EmptySequenceError      : public Error { public: using Error::Error; };
class EmptyNeighborsError     : public Error { public: using Error::Error; };
class EmptySeenSetError       : public Error { public: using Error::Error; };

class MissingGradientError : public Error { public: using Error::Error; };
class NumericError         : public Error { public: using Error::Error; };
class TrainingDivergedError: public Error { public: using Error::Error; };

} // namespace l2ac
