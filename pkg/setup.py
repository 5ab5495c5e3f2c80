import setuptools


with open('README.md', 'r') as fh:
    long_description = fh.read()


setuptools.setup(
    name='stlpack',
    version='0.1.0',
    description='Delay-aware STL-constrained control of networked plants with soft actor-critic',
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=setuptools.find_packages(exclude=('tests',)),
    install_requires=['numpy>=1.21', 'matplotlib>=3.5'],
    entry_points={'console_scripts': ['stlpack=stlpack.cli:main']},
    classifiers=[
        'Programming Language :: Python :: 3',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
    ],
    python_requires='>=3.8',
)
